"""Command-line experiment runner.

Subcommands: simulate, reconstruct (alias: sweep), ttnorms, selftest.
Exit codes: 0 success, 2 configuration or input error, 3 numerical contract
violation.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .dataio import decode_state, encode_state, read_dataset, write_csv, write_dataset, write_families
from .errors import ConfigError, ContractViolation, FcsError, IncompleteDataError, StencilError
from .fcsprop import ExactPropagator
from .fcsstats import (FcsSeries, cumulants_fd, current, reconstruct_z, steady_state)
from .freefermion import FreeFermionPropagator, build_resonant_level_quadratic
from .models import build_anderson, preset
from .tomography import build_map_from_dataset, check_cptp, dataset_from_propagator
from .transfer import smooth_maps, tt_from_maps_stationary, tt_norm_series

EXIT_OK, EXIT_CONFIG, EXIT_CONTRACT = 0, 2, 3
Z_COLUMNS = ("lambda", "t", "re_Z", "im_Z", "provenance")
CURRENT_COLUMNS = ("t", "I", "se", "im_residue")
SWEEP_COLUMNS = ("t_m", "inv_t_m", "I_ss", "se", "flag")
NORM_COLUMNS = ("lambda", "n", "t", "norm")


def build_propagator(cfg: ExperimentConfig):
    params = preset(cfg.model.preset, **cfg.model.overrides.model_dump())
    if cfg.model.resolved_backend() == "free-fermion":
        return FreeFermionPropagator(build_resonant_level_quadratic(params))
    return ExactPropagator(build_anderson(params))


def _executor(threads: int | None):
    if threads and threads > 1:
        return ThreadPoolExecutor(max_workers=threads)
    return nullcontext(None)


def _z_rows(series: FcsSeries, provenance: str):
    for i, lam in enumerate(series.lambdas):
        for t, z in zip(series.times, series.z[i]):
            yield (float(lam), float(t), float(z.real), float(z.imag), provenance)


def _has_stencil(lambdas, h: float, accuracy: int) -> bool:
    need = [h, -h] + ([2 * h, -2 * h] if accuracy == 4 else [])
    return all(any(abs(x - n) <= 1e-12 for x in lambdas) for n in need)


def _current_rows(series: FcsSeries, cfg: ExperimentConfig):
    c1 = cumulants_fd(series, 1, cfg.fd_step, cfg.fd_accuracy)
    cur = current(c1, cfg.dt)
    rows = [(float(t), float(i), "nan", float(r)) for t, i, r in zip(cur.times, cur.values, c1.residue)]
    return cur, rows


def _series_from_maps(maps_by_lam: dict, rho, dt: float) -> FcsSeries:
    lambdas = sorted(maps_by_lam)
    d = rho.shape[0]
    z = []
    for lam in lambdas:
        zeta = (maps_by_lam[lam] @ rho.reshape(-1)).reshape(-1, d, d)
        z.append(np.trace(zeta, axis1=1, axis2=2))
    times = dt * np.arange(len(z[0]))
    return FcsSeries(np.array(lambdas), times, np.array(z))


def _write_config(out: Path, cfg: ExperimentConfig) -> None:
    (out / "config.json").write_text(cfg.normalized_json())


def _prepare_out(out) -> Path:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


# -- commands ----------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig, out, threads: int | None = None) -> Path:
    """Exact short-time tomography: dataset, exact Z series and (if possible) current."""
    out = _prepare_out(out)
    prop = build_propagator(cfg)
    meta = {
        "preset": cfg.model.preset,
        "overrides": cfg.model.overrides.model_dump(exclude_none=True),
        "backend": cfg.model.resolved_backend(),
        "rho_s0": encode_state(prop.rho_s0),
        "noise": {"sigma": cfg.noise.sigma, "seed": cfg.noise.seed},
    }
    with _executor(threads) as ex:
        ds = dataset_from_propagator(prop, cfg.lambdas, cfg.dt, cfg.n_data, cfg.basis.input,
                                     cfg.basis.output, meta, executor=ex)
    clean = build_map_from_dataset(ds)

    exact = _series_from_maps(clean, np.asarray(prop.rho_s0), cfg.dt)
    if 0.0 in clean:
        z0 = exact.at(0.0)
        if np.abs(z0 - 1.0).max() > 1e-10:
            raise ContractViolation(f"Z at lambda=0 deviates from 1 by {np.abs(z0 - 1).max():.3g}")
        for n, sup in enumerate(clean[0.0]):
            rep = check_cptp(sup, tol=1e-8)
            if not rep.passed:
                raise ContractViolation(f"lambda=0 map at n={n} is not CPTP: {rep}")

    if cfg.noise.sigma > 0:
        rng = np.random.default_rng(cfg.noise.seed)
        data = ds.data.copy()
        for i in range(len(ds.lambdas)):
            noise = rng.standard_normal(data[i, 1:].shape) + 1j * rng.standard_normal(data[i, 1:].shape)
            data[i, 1:] += cfg.noise.sigma * noise
        ds.data = data

    write_dataset(out / "dataset.txt", ds)
    write_csv(out / "z_series.csv", Z_COLUMNS, _z_rows(exact, "exact"))
    if _has_stencil(cfg.lambdas, cfg.fd_step, cfg.fd_accuracy):
        _, rows = _current_rows(exact, cfg)
        write_csv(out / "current.csv", CURRENT_COLUMNS, rows)
    _write_config(out, cfg)
    return out


def _load_maps(dataset_path):
    ds = read_dataset(dataset_path)
    if "rho_s0" not in ds.meta:
        raise IncompleteDataError(f"{dataset_path}: header lacks the initial system state")
    return ds, build_map_from_dataset(ds), decode_state(ds.meta["rho_s0"])


def _provenance(ds, t_m: float, smoothing: int) -> str:
    prov = f"reconstructed(t_m={t_m:g};N={smoothing})"
    noise = ds.meta.get("noise", {})
    if noise.get("sigma", 0.0) > 0:
        prov += f"+noisy(sigma={noise['sigma']:g};seed={noise['seed']})"
    return prov


def cmd_reconstruct(cfg: ExperimentConfig, dataset_path, out) -> Path:
    """Smoothing, truncated TT propagation, current and the cutoff sweep."""
    out = _prepare_out(out)
    ds, maps, rho = _load_maps(dataset_path)
    if abs(ds.dt - cfg.dt) > 1e-12:
        raise ConfigError(f"config dt={cfg.dt} does not match dataset dt={ds.dt}")
    for t_m in cfg.cutoffs:
        if round(t_m / ds.dt) > ds.n_steps:
            raise ConfigError(f"cutoff {t_m} exceeds the dataset horizon {ds.n_steps * ds.dt:g}")
    stencil = _has_stencil(ds.lambdas, cfg.fd_step, cfg.fd_accuracy)
    z_rows, sweep_rows = [], []
    for t_m in cfg.cutoffs:
        m = int(round(t_m / ds.dt))
        series = reconstruct_z(maps, rho, ds.dt, m, cfg.n_horizon, cfg.smoothing)
        tag = f"{t_m:g}"
        z_rows.extend(_z_rows(series, _provenance(ds, t_m, cfg.smoothing)))
        families = [tt_from_maps_stationary(smooth_maps(maps[lam][:m + 1], cfg.smoothing),
                                            lam=lam, dt=ds.dt, smoothing=cfg.smoothing)
                    for lam in sorted(maps)]
        write_families(out / f"tensors_tm{tag}.txt", families, {"t_m": t_m})
        if not stencil or "sweep" not in cfg.outputs:
            continue
        try:
            cur, rows = _current_rows(series, cfg)
            mean, se = steady_state(cur, cfg.tail_start)
            flag = "" if np.isfinite(mean) else "nonfinite"
            write_csv(out / f"current_tm{tag}.csv", CURRENT_COLUMNS, rows)
        except FcsError as exc:
            mean, se, flag = float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"
        sweep_rows.append((m * ds.dt, 1.0 / (m * ds.dt), mean, se, flag))
    write_csv(out / "z_series.csv", Z_COLUMNS, z_rows)
    if sweep_rows:
        write_csv(out / "sweep.csv", SWEEP_COLUMNS, sweep_rows)
    elif "sweep" in cfg.outputs:
        print("note: counting-field stencil missing from dataset; current and sweep skipped",
              file=sys.stderr)
    _write_config(out, cfg)
    return out


def ttnorm_rows(maps: dict, dt: float):
    for lam in sorted(maps):
        fam = tt_from_maps_stationary(maps[lam], lam=lam, dt=dt)
        for n, norm in enumerate(tt_norm_series(fam), start=1):
            yield (float(lam), n, float(n * dt), float(norm))


def cmd_ttnorms(cfg: ExperimentConfig, dataset_path, out) -> Path:
    """Norms of the raw (unsmoothed) transfer tensors over the full data horizon."""
    out = _prepare_out(out)
    ds, maps, _ = _load_maps(dataset_path)
    write_csv(out / "ttnorms.csv", NORM_COLUMNS, ttnorm_rows(maps, ds.dt))
    _write_config(out, cfg)
    return out


# -- entry point -------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fcstt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "reconstruct", "sweep", "ttnorms"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        if name != "simulate":
            sp.add_argument("--dataset", type=Path, default=None,
                            help="map dataset (default: OUT/dataset.txt)")
    st = sub.add_parser("selftest")
    st.add_argument("--threads", type=int, default=None)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "selftest":
            from .selftest import run_selftest
            return EXIT_OK if run_selftest() else EXIT_CONTRACT
        cfg = load_config(args.config, seed=args.seed)
        if args.command == "simulate":
            cmd_simulate(cfg, args.out, args.threads)
            return EXIT_OK
        dataset = args.dataset or args.out / "dataset.txt"
        if args.command in ("reconstruct", "sweep"):
            cmd_reconstruct(cfg, dataset, args.out)
        else:
            cmd_ttnorms(cfg, dataset, args.out)
        return EXIT_OK
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (ConfigError, IncompleteDataError, StencilError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FcsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
