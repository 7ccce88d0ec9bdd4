"""Synthetic mixed-pixel scenes with known endmembers and abundances.

Pipeline: label map -> per-class signature substitution -> block-mean
downsampling (creates mixed pixels) -> additive Gaussian noise at a target SNR.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .core import AbundanceMatrix, EndmemberMatrix, HyperspectralScene, ParameterError, as_matrix
from .metrics import sad_matrix

log = logging.getLogger(__name__)

BACKGROUND = -1
MIN_SEPARATION = 0.1  # rad
MAX_RETRIES = 100


@dataclass(frozen=True, eq=False)
class GroundTruthMap:
    labels: np.ndarray
    class_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        lab = np.array(self.labels, dtype=np.int64, copy=True)
        if lab.ndim != 2 or lab.size == 0:
            raise ParameterError("label map must be a non-empty 2-D grid")
        if np.any(lab < BACKGROUND):
            raise ParameterError(f"labels must be >= 0 or the background value {BACKGROUND}")
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def used_classes(self) -> np.ndarray:
        u = np.unique(self.labels)
        return u[u != BACKGROUND]


@dataclass(frozen=True, eq=False)
class SpectralLibrary:
    names: tuple[str, ...]
    spectra: np.ndarray  # (K, L)
    wavelengths: Optional[np.ndarray] = None

    def __post_init__(self):
        S = np.array(np.atleast_2d(self.spectra), dtype=float, copy=True)
        if len(self.names) != S.shape[0]:
            raise ParameterError("one name per spectrum required")
        if not np.all(np.isfinite(S)) or np.any(S < 0):
            raise ParameterError("library spectra must be finite and nonnegative")
        if self.wavelengths is not None and len(self.wavelengths) != S.shape[1]:
            raise ParameterError("wavelength count does not match spectrum length")
        S.setflags(write=False)
        object.__setattr__(self, "spectra", S)
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))

    @property
    def entries(self) -> list[tuple[str, np.ndarray]]:
        return list(zip(self.names, self.spectra))

    def __len__(self):
        return self.spectra.shape[0]


@dataclass(frozen=True, eq=False)
class SimulatedScene:
    scene: HyperspectralScene
    true_endmembers: EndmemberMatrix
    true_abundances: AbundanceMatrix
    snr_db: float
    factor: int
    seed: int
    classes: tuple[int, ...] = ()
    clamp_rate: float = 0.0
    block_coords: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SimulationConfig:
    """Defaults reproduce a 145 x 145 map downsampled by 5 at 30 dB."""

    rows: int = 145
    cols: int = 145
    endmembers: int = 4
    bands: int = 200
    factor: int = 5
    snr_db: float = 30.0
    seed: int = 0
    map_style: str = "voronoi"
    regions: Optional[int] = 16
    label_map_path: Optional[str] = None
    library_path: Optional[str] = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


# ---------------------------------------------------------------- label maps

def generate_label_map(rows: int, cols: int, K: int, seed: int = 0, style: str = "blocks",
                       regions: Optional[int] = None) -> GroundTruthMap:
    """Synthetic ground-truth map in which every class ``0..K-1`` occurs.

    ``blocks`` tiles the grid into a near-square arrangement of rectangles,
    labelled row-major. ``voronoi`` labels each pixel with the class of the
    nearest of ``regions`` (default ``K``) seeded sites; the first ``K`` sites
    take classes ``0..K-1`` and any further sites random classes.
    """
    rows, cols, K = int(rows), int(cols), int(K)
    if K < 1 or rows < 1 or cols < 1:
        raise ParameterError("rows, cols and K must be >= 1")
    if K > rows * cols:
        raise ParameterError(f"cannot place {K} classes on a {rows}x{cols} grid")

    if style == "blocks":
        gr = math.ceil(math.sqrt(K))
        gc = math.ceil(K / gr)
        r_edges = np.linspace(0, rows, gr + 1).round().astype(int)
        c_edges = np.linspace(0, cols, gc + 1).round().astype(int)
        if np.any(np.diff(r_edges) == 0) or np.any(np.diff(c_edges) == 0):
            raise ParameterError(f"grid {rows}x{cols} too small for {K} blocks")
        rband = np.searchsorted(r_edges, np.arange(rows), side="right") - 1
        cband = np.searchsorted(c_edges, np.arange(cols), side="right") - 1
        labels = (rband[:, None] * gc + cband[None, :]) % K
        return GroundTruthMap(labels)

    if style == "voronoi":
        n_sites = K if regions is None else int(regions)
        if n_sites < K:
            raise ParameterError("regions must be >= K")
        if n_sites > rows * cols:
            raise ParameterError("more regions than pixels")
        rng = np.random.default_rng(seed)
        flat = rng.choice(rows * cols, size=n_sites, replace=False)
        sites = np.column_stack(np.unravel_index(flat, (rows, cols))).astype(float)
        site_class = np.concatenate([np.arange(K), rng.integers(0, K, n_sites - K)])
        rr, cc = np.mgrid[0:rows, 0:cols]
        d = (rr[..., None] - sites[:, 0]) ** 2 + (cc[..., None] - sites[:, 1]) ** 2
        return GroundTruthMap(site_class[np.argmin(d, axis=-1)])

    raise ParameterError(f"unknown map style {style!r}")


# ---------------------------------------------------------------- spectra

def default_wavelengths(L: int) -> np.ndarray:
    return np.linspace(0.4, 2.5, L)


def _smooth_spectrum(rng: np.random.Generator, L: int) -> np.ndarray:
    b = np.arange(L, dtype=float)
    s = np.full(L, rng.uniform(0.02, 0.1))
    for _ in range(rng.integers(2, 5)):
        center = rng.uniform(0, L)
        width = rng.uniform(max(L / 20, 0.5), max(L / 5, 1.0))
        s += rng.uniform(0.1, 0.7) * np.exp(-0.5 * ((b - center) / width) ** 2)
    return s


def synthesize_library(K: int, L: int, seed: int = 0) -> SpectralLibrary:
    """``K`` smooth positive spectra, pairwise at least 0.1 rad apart."""
    K, L = int(K), int(L)
    if K < 1 or L < 1:
        raise ParameterError("K and L must be >= 1")
    rng = np.random.default_rng(seed)
    accepted: list[np.ndarray] = []
    retries = 0
    while len(accepted) < K:
        cand = _smooth_spectrum(rng, L)
        if accepted:
            angles = sad_matrix(np.column_stack(accepted), cand[:, None])
            if np.min(angles) < MIN_SEPARATION:
                retries += 1
                if retries > MAX_RETRIES:
                    raise ParameterError(
                        f"could not separate {K} spectra of length {L} by {MIN_SEPARATION} rad")
                continue
        accepted.append(cand)
    return SpectralLibrary(tuple(f"material_{k}" for k in range(K)), np.vstack(accepted),
                           default_wavelengths(L))


# ---------------------------------------------------------------- pipeline

def rasterize(gt: GroundTruthMap, lib: SpectralLibrary) -> HyperspectralScene:
    """Scene whose pixel ``(r, c)`` holds the spectrum of its class.

    Pixels are ordered row-major. Background pixels are all-zero.
    """
    used = gt.used_classes
    if used.size and used.max() >= len(lib):
        missing = int(used[used >= len(lib)][0])
        raise ParameterError(f"label {missing} has no library spectrum (library size {len(lib)})")
    flat = gt.labels.ravel()
    data = np.zeros((lib.spectra.shape[1], flat.size))
    fg = flat != BACKGROUND
    data[:, fg] = lib.spectra[flat[fg]].T
    return HyperspectralScene(data, spatial_shape=gt.shape, wavelengths=lib.wavelengths)


def _block_layout(gt: GroundTruthMap, factor: int):
    rows, cols = gt.shape
    br, bc = -(-rows // factor), -(-cols // factor)
    rr, cc = np.divmod(np.arange(rows * cols), cols)
    block = (rr // factor) * bc + (cc // factor)
    return br, bc, block


def _exact_unit_sums(F: np.ndarray) -> np.ndarray:
    # fold the rounding residual of each column sum into its nonzero entries,
    # largest first, until the floating point sum is exactly one
    order = np.argsort(-F, axis=0, kind="stable")
    nonzero = (F > 0).sum(axis=0)
    for attempt in range(8):
        residual = 1.0 - F.sum(axis=0)
        bad = np.flatnonzero(residual)
        if bad.size == 0:
            break
        rows = order[attempt % np.maximum(nonzero[bad], 1), bad]
        F[rows, bad] = np.maximum(F[rows, bad] + residual[bad], 0.0)
    return F


def downsample(scene_highres: HyperspectralScene, gt: GroundTruthMap, factor: int):
    """Block means over ``factor x factor`` tiles and the matching true abundances.

    Returns ``(scene, abundances, classes, block_coords)``. Abundance row ``i``
    is the fraction of class ``classes[i]`` among the labelled pixels of a block.
    Blocks with no labelled pixel are dropped.
    """
    factor = int(factor)
    if factor < 1:
        raise ParameterError("factor must be >= 1")
    Y = as_matrix(scene_highres)
    if Y.shape[1] != gt.labels.size:
        raise ParameterError("scene and label map sizes differ")
    br, bc, block = _block_layout(gt, factor)
    flat = gt.labels.ravel()
    fg = flat != BACKGROUND
    classes = gt.used_classes
    class_row = np.full(int(flat.max(initial=0)) + 1, -1)
    class_row[classes] = np.arange(classes.size)

    n_blocks = br * bc
    counts = np.zeros((classes.size, n_blocks))
    np.add.at(counts, (class_row[flat[fg]], block[fg]), 1.0)
    members = counts.sum(axis=0)
    keep = np.flatnonzero(members > 0)
    counts, members = counts[:, keep], members[keep]
    fractions = _exact_unit_sums(counts / members)

    remap = np.full(n_blocks, -1)
    remap[keep] = np.arange(keep.size)
    agg = sp.csr_matrix((1.0 / members[remap[block[fg]]], (remap[block[fg]], np.flatnonzero(fg))),
                        shape=(keep.size, flat.size))
    low = np.asarray((agg @ Y.T).T)
    coords = np.column_stack(np.divmod(keep, bc))
    shape = (br, bc) if keep.size == n_blocks else None
    scene = HyperspectralScene(np.maximum(low, 0.0), spatial_shape=shape, wavelengths=scene_highres.wavelengths)
    return scene, AbundanceMatrix(fractions, normalized=True), classes, coords


@dataclass(frozen=True, eq=False)
class NoiseReport:
    scene: HyperspectralScene
    noise: np.ndarray
    clamp_rate: float
    empirical_snr_db: float


def add_noise_detailed(scene: HyperspectralScene, snr_db: float, seed: int = 0) -> NoiseReport:
    Y = as_matrix(scene)
    if snr_db is None or np.isposinf(snr_db):
        return NoiseReport(scene, np.zeros_like(Y), 0.0, math.inf)
    if not np.isfinite(snr_db):
        raise ParameterError(f"snr_db must be finite or +inf, got {snr_db}")
    p_signal = float(np.mean(Y * Y))
    sigma = math.sqrt(p_signal / 10.0 ** (snr_db / 10.0))
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=Y.shape)
    noisy = Y + noise
    negative = noisy < 0
    clamp_rate = float(negative.mean())
    if clamp_rate:
        log.info("clamped %.4f%% of noisy entries at zero", 100 * clamp_rate)
    empirical = 10.0 * math.log10(p_signal / float(np.mean(noise * noise)))
    out = HyperspectralScene(np.where(negative, 0.0, noisy), spatial_shape=scene.spatial_shape,
                             wavelengths=scene.wavelengths)
    return NoiseReport(out, noise, clamp_rate, empirical)


def add_noise(scene: HyperspectralScene, snr_db: float, seed: int = 0) -> HyperspectralScene:
    """Add i.i.d. Gaussian noise at ``snr_db`` (``inf`` disables); clamps at 0."""
    return add_noise_detailed(scene, snr_db, seed).scene


def simulate(config: SimulationConfig | None = None, **overrides) -> SimulatedScene:
    from . import dataio

    cfg = config or SimulationConfig()
    if overrides:
        cfg = SimulationConfig(**{**cfg.as_dict(), **overrides})
    map_seed, lib_seed, noise_seed = (int(s.generate_state(1)[0])
                                      for s in np.random.SeedSequence(int(cfg.seed)).spawn(3))

    if cfg.label_map_path:
        gt = dataio.read_label_map(cfg.label_map_path)
    else:
        gt = generate_label_map(cfg.rows, cfg.cols, cfg.endmembers, map_seed, cfg.map_style, cfg.regions)
    if cfg.library_path:
        lib = dataio.read_library(cfg.library_path)
    else:
        lib = synthesize_library(int(gt.used_classes.max()) + 1, cfg.bands, lib_seed)

    hi = rasterize(gt, lib)
    low, abundances, classes, coords = downsample(hi, gt, cfg.factor)
    noisy = add_noise_detailed(low, cfg.snr_db, noise_seed)
    endmembers = EndmemberMatrix(lib.spectra[classes].T, names=tuple(lib.names[c] for c in classes))
    return SimulatedScene(
        scene=noisy.scene,
        true_endmembers=endmembers,
        true_abundances=abundances,
        snr_db=float(cfg.snr_db),
        factor=int(cfg.factor),
        seed=int(cfg.seed),
        classes=tuple(int(c) for c in classes),
        clamp_rate=noisy.clamp_rate,
        block_coords=coords,
        extra={"empirical_snr_db": noisy.empirical_snr_db, "config": cfg.as_dict()},
    )
