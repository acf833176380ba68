"""End-to-end experiments: synthetic truth, simulated sensing, reconstruction, artifacts."""
import csv
import io as _io
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import io
from .linop import CglsConfig
from .lowrank import AltMinConfig, altmin_lowrap, altmin_trunc
from .measurement import Kind, gen_cdp, gen_gaussian, observe
from .metrics import ReconstructionReport, model_correct, param_count
from .pr import RwfConfig, SpectralInitConfig
from .tensor import TuckerFactors, frames_to_tensor, tensor_to_frames
from .tspr import NumericalAbort, TsprConfig, tspr_run


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "REPORT_COLUMNS",
    "synth_tensor",
    "synth",
    "n_measurements",
    "simulate",
    "reconstruct",
    "run_experiment",
    "parse_kv",
]

ALGORITHMS = ("tspr", "altminlowrap", "altmintrunc")
MEASUREMENTS = tuple(k.value for k in Kind)

REPORT_COLUMNS = (
    "algorithm", "measurement", "n1", "n2", "q", "m", "ranks", "params", "T",
    "T_rwf", "T_cgls", "alpha", "seed", "mat_dist", "relative_error",
    "wall_time_s", "status",
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """One experiment.  ``m_ratio`` applies to Gaussian sensing, ``L`` to CDP.

    ``record_time`` controls whether ``wall_time_s`` is written to the report;
    it is off by default so that repeated runs produce identical files.
    """

    algorithm: str = "tspr"
    measurement: str = "complex-gaussian"
    m_ratio: float = None
    L: int = None
    ranks: tuple = None
    T: int = 20
    T_rwf: int = 25
    T_cgls: int = 50
    alpha: float = 3.0
    seed: int = 0
    correction: bool = False
    input: str = None
    output_dir: str = None
    record_time: bool = False

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if self.measurement not in MEASUREMENTS:
            raise ConfigError(f"measurement must be one of {MEASUREMENTS}")
        if self.measurement == Kind.CDP.value:
            if self.L is None or int(self.L) != self.L or self.L < 1:
                raise ConfigError("cdp measurement requires a positive integer L")
        elif self.m_ratio is None or not self.m_ratio > 0:
            raise ConfigError("gaussian measurement requires m_ratio > 0")
        if self.ranks is None:
            raise ConfigError("ranks are required")
        want = 3 if self.algorithm == "tspr" else 1
        if len(self.ranks) != want:
            raise ConfigError(
                f"{self.algorithm} takes {want} rank value(s), got {len(self.ranks)}")
        if min(self.ranks) < 1:
            raise ConfigError("ranks must be positive")
        if self.T < 0 or self.T_rwf < 0 or self.T_cgls < 1:
            raise ConfigError("T, T_rwf must be >= 0 and T_cgls >= 1")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        return self


# synthetic truth ---------------------------------------------------------

def synth_tensor(dims, ranks, seed=0, complex=True):
    """Exactly Tucker-rank tensor with ``||X||_F = sqrt(q)``.

    Factors are random with orthonormal columns, the core is random with unit
    Frobenius norm.
    """
    dims = tuple(int(d) for d in dims)
    ranks = tuple(int(r) for r in ranks)
    if any(r > d or r < 1 for r, d in zip(ranks, dims)):
        raise ValueError(f"ranks {ranks} must lie within dims {dims}")
    rng = np.random.default_rng(seed)

    def draw(shape):
        a = rng.standard_normal(shape)
        if complex:
            a = a + 1j * rng.standard_normal(shape)
        return a

    factors = [np.linalg.qr(draw((d, r)))[0] for d, r in zip(dims, ranks)]
    core = draw(ranks)
    core = core / np.linalg.norm(core)
    X = TuckerFactors(core, *factors).reconstruct()
    return X * (np.sqrt(dims[2]) / np.linalg.norm(X))


def synth(dims, ranks, seed, path, complex=True):
    X = synth_tensor(dims, ranks, seed, complex)
    io.write_stack(path, X, complex=complex)
    return X


# sensing -------------------------------------------------------------------

def n_measurements(n, measurement, m_ratio=None, L=None):
    """Measurements per frame: ``round(m_ratio n)`` or ``L n`` for CDP."""
    if measurement == Kind.CDP.value:
        return int(L) * n
    m = int(round(m_ratio * n))
    if m < 1:
        raise ConfigError(f"m_ratio={m_ratio} gives no measurements for n={n}")
    return m


def simulate(X, measurement, seed, m_ratio=None, L=None):
    """Sensing ensemble for the ``(n1, n2, q)`` truth, observations attached."""
    n1, n2, q = X.shape
    n = n1 * n2
    if measurement == Kind.CDP.value:
        ens = gen_cdp(n, int(L), q, seed)
    else:
        m = n_measurements(n, measurement, m_ratio)
        ens = gen_gaussian(n, m, q, complex=measurement == Kind.COMPLEX_GAUSSIAN.value,
                           seed=seed)
    return ens.with_observations(observe(ens, tensor_to_frames(X)))


def _params(cfg, dims):
    n1, n2, q = dims
    if cfg.algorithm == "tspr":
        return param_count("tucker", n1, n2, q, *cfg.ranks)
    return param_count("matrix", n1 * n2, q, cfg.ranks[0])


def reconstruct(ens, dims, cfg):
    """Run the configured algorithm (and optional correction) on ``ens``.

    Returns the ``(n1, n2, q)`` estimate and the objective trace.
    """
    n1, n2, _ = dims
    rwf = RwfConfig(iters=cfg.T_rwf)
    cg = CglsConfig(max_iters=cfg.T_cgls)
    spectral = SpectralInitConfig(alpha=cfg.alpha, seed=cfg.seed)
    if cfg.algorithm == "tspr":
        tcfg = TsprConfig(tuple(cfg.ranks), cfg.T, rwf, cg, spectral)
        Xhat, state = tspr_run(ens, dims, tcfg)
        trace = state.objective_trace
    else:
        acfg = AltMinConfig(cfg.ranks[0], cfg.T, rwf, cg, spectral)
        run = altmin_lowrap if cfg.algorithm == "altminlowrap" else altmin_trunc
        Xmat, _, trace = run(ens, acfg)
        if not np.all(np.isfinite(trace)):
            raise NumericalAbort("non-finite objective")
        Xhat = frames_to_tensor(Xmat.T, n1, n2)
    if cfg.correction:
        Xhat = model_correct(ens, Xhat, rwf)
    if not np.all(np.isfinite(Xhat)):
        raise NumericalAbort("non-finite reconstruction")
    return Xhat, trace


# artifacts -------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_bytes(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue().encode()


def write_frames(X, out_dir, prefix="frame"):
    """One PGM per frame plus ``frame_scales.csv`` recording each min/max."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in range(X.shape[2]):
        name = f"{prefix}_{k:04d}.pgm"
        lo, hi = io.export_pgm(X[:, :, k], out_dir / name)
        rows.append((k, name, lo, hi))
    (out_dir / "frame_scales.csv").write_bytes(
        _csv_bytes(("frame", "file", "min", "max"), rows))


def run_experiment(cfg):
    """Simulate, reconstruct, evaluate and persist one experiment.

    Writes ``report.csv``, ``trace.csv``, ``reconstruction.lrpr`` and
    ``frames/`` (PGM images and their scale sidecar) into ``cfg.output_dir``.
    Numerical aborts are recorded in the report's ``status`` column rather
    than raised.
    """
    cfg.validate()
    if cfg.input is None or cfg.output_dir is None:
        raise ConfigError("input and output_dir are required")
    try:
        X = io.read_stack(cfg.input)
    except (OSError, io.FrameStackError) as exc:
        raise ConfigError(f"cannot read {cfg.input}: {exc}") from exc
    dims = X.shape
    for r, d in zip(cfg.ranks, dims if cfg.algorithm == "tspr"
                    else (min(dims[0] * dims[1], dims[2]),)):
        if r > d:
            raise ConfigError(f"rank {r} exceeds dimension {d}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    ens = simulate(X, cfg.measurement, cfg.seed, cfg.m_ratio, cfg.L)
    start = time.perf_counter()
    status = "ok"
    trace = []
    Xhat = np.zeros_like(X)
    with np.errstate(all="ignore"):
        try:
            Xhat, trace = reconstruct(ens, dims, cfg)
        except (NumericalAbort, np.linalg.LinAlgError) as exc:
            status = f"aborted: {exc}"
    elapsed = time.perf_counter() - start

    params = _params(cfg, dims)
    report = ReconstructionReport.compare(Xhat, X, params, elapsed, trace)
    report.status = status
    row = (cfg.algorithm, cfg.measurement, dims[0], dims[1], dims[2], ens.m,
           "x".join(str(r) for r in cfg.ranks), params, cfg.T, cfg.T_rwf,
           cfg.T_cgls, float(cfg.alpha), cfg.seed,
           report.mat_dist if status == "ok" else "",
           report.relative_error if status == "ok" else "",
           elapsed if cfg.record_time else "", status)
    (out / "report.csv").write_bytes(_csv_bytes(REPORT_COLUMNS, [row]))
    (out / "trace.csv").write_bytes(
        _csv_bytes(("iteration", "objective"), enumerate(map(float, trace))))
    if status == "ok":
        io.write_stack(out / "reconstruction.lrpr", Xhat, complex=True)
        write_frames(Xhat, out / "frames")
    return report


# key=value config files ------------------------------------------------------

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key, value):
    if key == "ranks":
        if isinstance(value, (tuple, list)):
            return tuple(int(v) for v in value)
        try:
            return tuple(int(v) for v in str(value).replace("x", ",").split(",") if v)
        except ValueError:
            raise ConfigError(f"ranks: cannot parse {value!r}") from None
    kind = _FIELD_TYPES[key]
    if kind is bool:
        if isinstance(value, bool):
            return value
        if str(value).lower() in ("1", "true", "yes", "on"):
            return True
        if str(value).lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: cannot interpret {value!r} as a boolean")
    if kind in (int, float):
        try:
            return kind(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    return str(value)


def parse_kv(text):
    """Parse ``key = value`` lines (``#`` comments allowed) into config fields.

    Keys may use dashes or underscores.
    """
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "l":
            key = "L"
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def config_from(mapping):
    data = {k: _coerce(k, v) if v is not None else None for k, v in mapping.items()}
    return ExperimentConfig(**data)


def config_dict(cfg):
    return asdict(cfg)
