"""
Scoring how sparse an abundance vector is
=========================================

The S-measure maps any nonnegative vector to a number in [0, 1]: 0 for a
perfectly even vector, 1 for a vector with a single nonzero entry. It only
looks at the shape of the vector, so scaling it changes nothing.
"""

import numpy as np

from gnmfsmc import s_measure, s_measure_gradient, sparseness_cost

# The two extremes and something in between
for x in ([0.25, 0.25, 0.25, 0.25], [0.7, 0.1, 0.1, 0.1], [1.0, 0.0, 0.0, 0.0]):
    print(f"S({x}) = {s_measure(np.array(x)):.4f}")

# Scale invariance: multiplying by 1000 gives the same score
x = np.array([3.0, 1.0])
print("S([3, 1])        =", s_measure(x))
print("S(1000 * [3, 1]) =", s_measure(1000 * x))

# sigma1 controls how quickly the score rises away from the uniform vector
for s1 in (1.0, 2.0, 4.0):
    print(f"sigma1={s1}: S([0.6, 0.3, 0.1]) = {s_measure(np.array([0.6, 0.3, 0.1]), s1):.4f}")

# The gradient points toward sparser vectors and is orthogonal to x itself,
# which is what scale invariance implies
g = s_measure_gradient(np.array([0.6, 0.3, 0.1]))
print("gradient:", np.round(g, 4), " x . g =", float(np.dot([0.6, 0.3, 0.1], g)))

# For a whole abundance matrix the cost is the mean score over pixels
H = np.array([[1.0, 0.5, 0.9],
              [0.0, 0.5, 0.1]])
print("mean sparseness of H:", round(sparseness_cost(H), 4))
