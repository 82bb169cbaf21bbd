"""Monte Carlo over products of rectangular complex Ginibre factors.

Entries are standard complex Gaussians with E|x|^2 = 1 (real and imaginary
parts of variance 1/2 each); this is the unique normalization for which the
single-factor square case has its soft edge at log(4N), matching the spectral
parameter of the low-DWR scaling.

Seeding is a two-level splitmix64 hash: record i draws its factors with seeds
hash(hash(master_seed, i), j), so datasets are bit-for-bit reproducible for
any worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .linalg import PrecisionContext, product_log_spectrum
from .profiles import DimensionProfile
from .scaling import EdgeScaling, gaussian_center, gaussian_scale

_MASK64 = (1 << 64) - 1
_DATASET_VERSION = 1


def splitmix64(x: int) -> int:
    """One splitmix64 mixing step of a 64-bit word."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def seed_hash(*parts: int) -> int:
    """Order-sensitive 64-bit hash of integer parts (splitmix64 chain)."""
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = splitmix64((h ^ (int(p) & _MASK64)) & _MASK64)
    return h


def sample_ginibre(rows: int, cols: int, seed: int) -> np.ndarray:
    """rows x cols complex Ginibre matrix, E|x_ij|^2 = 1, deterministic in seed."""
    if rows < 1 or cols < 1:
        raise DomainError("rows and cols must be >= 1")
    rng = np.random.default_rng(seed)
    parts = rng.standard_normal((rows, cols, 2))
    return (parts[..., 0] + 1j * parts[..., 1]) * math.sqrt(0.5)


@dataclass
class SampleRecord:
    sample_index: int
    derived_seed: int
    log_spectrum: np.ndarray
    reliable_count: int
    degenerate: bool = False


@dataclass
class SampleDataset:
    profile: DimensionProfile
    master_seed: int
    precision_bits: int
    mode: str
    records: list[SampleRecord] = field(default_factory=list)

    def spectra(self) -> np.ndarray:
        """(samples, N) array of log-spectra in record order."""
        return np.array([r.log_spectrum for r in self.records])

    def top_values(self, k: int = 1) -> np.ndarray:
        """k-th largest value of each record (k = 1 is the maximum)."""
        return np.array([r.log_spectrum[k - 1] for r in self.records])


def simulate_product(profile: DimensionProfile, seed: int,
                     ctx: PrecisionContext | None = None,
                     mode: str = "dense") -> SampleRecord:
    """One product draw: M factors with per-factor derived seeds, then spectrum."""
    ctx = ctx or PrecisionContext()
    factors = [
        sample_ginibre(rows, cols, seed_hash(seed, j))
        for j, (rows, cols) in enumerate(profile.factor_shapes(), start=1)
    ]
    spec = product_log_spectrum(factors, mode=mode, ctx=ctx)
    vals = spec.values
    degenerate = bool(np.any(np.diff(vals) == 0.0))
    return SampleRecord(
        sample_index=-1,
        derived_seed=seed,
        log_spectrum=vals,
        reliable_count=spec.reliable_count,
        degenerate=degenerate,
    )


def _worker_run(args):
    profile_dict, indices, master_seed, bits, mode = args
    profile = DimensionProfile.from_dict(profile_dict)
    ctx = PrecisionContext(bits)
    out = []
    for i in indices:
        rec = simulate_product(profile, seed_hash(master_seed, i), ctx, mode)
        rec.sample_index = i
        out.append(rec)
    return out


def run_monte_carlo(profile: DimensionProfile, samples: int, master_seed: int,
                    ctx: PrecisionContext | None = None, workers: int = 1,
                    mode: str = "dense") -> SampleDataset:
    """samples independent records; output independent of the worker count."""
    ctx = ctx or PrecisionContext()
    if samples < 1:
        raise DomainError("samples must be >= 1")
    if workers < 1:
        raise DomainError("workers must be >= 1")

    indices = list(range(samples))
    if workers == 1:
        records = _worker_run((profile.to_dict(), indices, master_seed,
                               ctx.mantissa_bits, mode))
    else:
        chunks = [indices[w::workers] for w in range(workers)]
        args = [(profile.to_dict(), chunk, master_seed, ctx.mantissa_bits, mode)
                for chunk in chunks if chunk]
        records = []
        try:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for part in pool.map(_worker_run, args):
                    records.extend(part)
        except Exception as exc:  # noqa: BLE001 - abort with a diagnostic
            raise NumericalError(f"monte carlo worker failed: {exc!r}") from exc
        records.sort(key=lambda r: r.sample_index)

    return SampleDataset(
        profile=profile,
        master_seed=master_seed,
        precision_bits=ctx.mantissa_bits,
        mode=mode,
        records=records,
    )


def rescale_high_dwr(x_k: float, k: int, profile: DimensionProfile) -> float:
    """Center/scale the k-th largest value by the digamma sums."""
    center = gaussian_center(profile, k)
    scale = gaussian_scale(profile, k)
    return (x_k - center) / scale


def rescale_low_dwr(x_max: float, scaling: EdgeScaling,
                    mode: str = "corrected") -> float:
    """rho * (x_max - log lambda) with the requested rho mode."""
    return scaling.rho(mode) * (x_max - scaling.log_lambda)


# --- JSONL persistence -------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def save_dataset(dataset: SampleDataset, path) -> None:
    """One header object, then one object per record, 17-significant-digit values."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "kind": "ginprod-dataset",
            "version": _DATASET_VERSION,
            "profile": dataset.profile.to_dict(),
            "master_seed": dataset.master_seed,
            "samples": len(dataset.records),
            "precision_bits": dataset.precision_bits,
            "mode": dataset.mode,
        }
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for rec in dataset.records:
            obj = {
                "index": rec.sample_index,
                "seed": rec.derived_seed,
                "spectrum": [_fmt(v) for v in rec.log_spectrum],
                "reliable_count": rec.reliable_count,
                "degenerate": rec.degenerate,
            }
            fh.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


def load_dataset(path) -> SampleDataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise DomainError(f"empty dataset file {path}")
    header = json.loads(lines[0])
    if header.get("kind") != "ginprod-dataset":
        raise DomainError(f"{path} is not a ginprod dataset")
    if len(lines) == 1:
        raise DomainError(f"dataset {path} has a header but no records")
    records = []
    for ln in lines[1:]:
        obj = json.loads(ln)
        records.append(SampleRecord(
            sample_index=int(obj["index"]),
            derived_seed=int(obj["seed"]),
            log_spectrum=np.array([float(s) for s in obj["spectrum"]]),
            reliable_count=int(obj["reliable_count"]),
            degenerate=bool(obj.get("degenerate", False)),
        ))
    return SampleDataset(
        profile=DimensionProfile.from_dict(header["profile"]),
        master_seed=int(header["master_seed"]),
        precision_bits=int(header["precision_bits"]),
        mode=str(header["mode"]),
        records=records,
    )
