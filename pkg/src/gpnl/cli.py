"""Command-line runner: ``gpnl <kind> [--config PATH] [--seed N] [--out DIR] ...``.

Every run writes ``result.json`` (deterministic, ``"schema": 1``) and
``metadata.json`` (timestamp, thread count, wall time) into the output
directory.  Exit status is 0 when all tolerances hold, 1 on a tolerance
failure and 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import checks
from .config import SCHEMA_VERSION, ConfigError, ExperimentConfig, derive_seed, load_config, stream
from .gaussian import GaussianSpec, haar_unitary, unitary_from_json
from .gbs import GbsInstance, gbs_probability
from .hadamard import HadamardInstance, NumberConservingUnitary, run_hadamard
from .nonlinear import DiagonalHamiltonian
from .reduction import (
    Gpnl1Instance,
    amplitude,
    amplitude_series,
    gbs_output_state,
    run_reconstruction,
    spectral_amplitude,
)

KINDS = ("gbs-prob", "amplitude", "reconstruct", "hadamard", "verify-all")
ENV_PREFIX = "GPNL_"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _unitary(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.unitary is not None:
        try:
            U = unitary_from_json(cfg.unitary)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"field unitary: {exc}") from None
        if U.shape[0] != cfg.M:
            raise ConfigError(f"field unitary: size {U.shape[0]} does not match M={cfg.M}")
        return U
    return haar_unitary(cfg.M, derive_seed(cfg.seed, "unitary"))


def _instance(cfg: ExperimentConfig) -> Gpnl1Instance:
    try:
        return Gpnl1Instance.create(
            cfg.M,
            cfg.K,
            cfg.r,
            cfg.target,
            _unitary(cfg),
            cutoff=cfg.cutoff,
            tail_threshold=cfg.tail_threshold or 1e-10,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def run_gbs_prob(cfg: ExperimentConfig, out: Path) -> dict:
    gbs = GbsInstance(_unitary(cfg), cfg.r, cfg.K)
    psi = gbs_output_state(gbs, cfg.cutoff, cfg.tail_threshold or 1e-10)
    tol = 1e-8 * cfg.tolerance_scale
    instance = {"M": cfg.M, "K": cfg.K, "r": cfg.r, "seed": cfg.seed}
    worst = 0.0
    with open(out / "outcomes.jsonl", "w") as fh:
        for S in checks.collision_free_outcomes(cfg.M, cfg.N):
            p_h, p_f = gbs_probability(gbs, S), psi.probability(S)
            worst = max(worst, abs(p_h - p_f))
            row = {"instance": instance, "outcome": list(S), "p_hafnian": p_h, "p_fock": p_f, "abs_diff": abs(p_h - p_f)}
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return {"passed": worst <= tol, "max_abs_diff": worst, "tolerance": tol, "cutoff": psi.basis.photon_cutoff}


def run_amplitude(cfg: ExperimentConfig, out: Path) -> dict:
    inst = _instance(cfg)
    tol = 1e-10 * cfg.tolerance_scale
    rows = []
    for t in cfg.t:
        a, b = amplitude(inst, t), spectral_amplitude(inst, t)
        rows.append({"t": t, "re": a.real, "im": a.imag, "spectral_abs_diff": abs(a - b)})
    worst = max(r["spectral_abs_diff"] for r in rows)
    return {
        "passed": worst <= tol,
        "amplitudes": rows,
        "truncation_error": inst.truncation_error,
        "j_star": inst.j_star,
        "hamiltonian": inst.hamiltonian.to_dict(),
    }


def run_reconstruct(cfg: ExperimentConfig, out: Path) -> dict:
    inst = _instance(cfg)
    rep = run_reconstruction(inst, cfg.c, cfg.j_max, tolerance=1e-9 * cfg.tolerance_scale, threads=cfg.threads)
    if cfg.csv:
        series = amplitude_series(inst, rep.j_max, cfg.threads)
        with open(out / "amplitudes.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "t_k", "re", "im"])
            for k, t, re, im in series.to_csv_rows():
                writer.writerow([k, repr(t), repr(re), repr(im)])
    d = rep.to_dict()
    return {
        "passed": rep.passed,
        "J_max": rep.j_max,
        "Q": rep.q,
        "P_oracle": rep.p_oracle,
        "abs_err": rep.abs_err,
        "lemma2_bound": rep.tail_bound,
        "aliasing_mass": rep.aliasing_mass,
        "regime_ok": rep.regime_ok,
        "report": d,
    }


def _spec_from_dict(d: dict, M: int) -> GaussianSpec:
    disp = [complex(*p) if isinstance(p, (list, tuple)) else complex(p) for p in d.get("displacements", [0] * M)]
    U = unitary_from_json(d["interferometer"]) if "interferometer" in d else np.eye(M)
    return GaussianSpec(d.get("squeezings", [0.0] * M), U, disp)


def hadamard_instance(cfg: ExperimentConfig) -> HadamardInstance:
    spec = cfg.hadamard_instance
    if spec is None:
        # the joint register adds an ancilla, so the general default M is too big here
        M = cfg.M if "M" in cfg.model_fields_set else 2
        if M > 3:
            raise ConfigError("field M: random Hadamard instances need M <= 3")
        inst = checks.random_hadamard_instance(stream(cfg.seed, "hadamard-cli"), M)
        return HadamardInstance(inst.psi_g, inst.psi_g_prime, inst.V, cfg.alpha)
    try:
        H = DiagonalHamiltonian.from_dict(spec["hamiltonian"]) if spec.get("hamiltonian") else None
        V = NumberConservingUnitary(H, float(spec.get("t", 0.0)), int(spec.get("sign", 1)))
        return HadamardInstance(
            _spec_from_dict(spec["psi_g"], cfg.M), _spec_from_dict(spec["psi_g_prime"], cfg.M), V, cfg.alpha
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"field hadamard_instance: {exc}") from None


def run_hadamard_cmd(cfg: ExperimentConfig, out: Path) -> dict:
    rep = run_hadamard(hadamard_instance(cfg))
    tol = 1e-6 * cfg.tolerance_scale
    d = rep.to_dict()
    keys = ("p_real", "p_imag", "recovered_re", "recovered_im", "direct_re", "direct_im", "abs_err", "conditioning")
    result = {k: d[k] for k in keys}
    result["passed"] = rep.abs_err <= tol
    result["report"] = d
    return result


def run_verify_all(cfg: ExperimentConfig, out: Path) -> dict:
    results = checks.run_all(cfg.seed, cfg.tolerance_scale, cfg.threads)
    for r in results:
        print(r.summary(), flush=True)
    return {
        "passed": all(r.passed for r in results),
        "checks": [r.to_dict() for r in results],
        "failures": [r.criterion for r in results if not r.passed],
    }


RUNNERS = {
    "gbs-prob": run_gbs_prob,
    "amplitude": run_amplitude,
    "reconstruct": run_reconstruct,
    "hadamard": run_hadamard_cmd,
    "verify-all": run_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpnl", description=__doc__.splitlines()[0])
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--tolerance-scale", type=float, help="multiply every tolerance")
    parser.add_argument("--threads", type=int, help="worker threads for amplitude grids")
    return parser


def _env_overrides() -> dict:
    conv = {"SEED": int, "OUT": str, "TOLERANCE_SCALE": float, "THREADS": int}
    found = {}
    for key, fn in conv.items():
        raw = os.environ.get(ENV_PREFIX + key)
        if raw is not None:
            try:
                found[key.lower()] = fn(raw)
            except ValueError:
                raise ConfigError(f"environment {ENV_PREFIX}{key}: cannot parse {raw!r}") from None
    return found


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        overrides = _env_overrides()
        flags = {"seed": args.seed, "out": args.out, "tolerance_scale": args.tolerance_scale, "threads": args.threads}
        overrides.update({k: v for k, v in flags.items() if v is not None})
        overrides["kind"] = args.kind
        cfg = load_config(args.config or os.environ.get(ENV_PREFIX + "CONFIG"), overrides)
        out = Path(cfg.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"field out: cannot create {out}: {exc.strerror}") from None
        payload = RUNNERS[cfg.kind](cfg, out)
    except ConfigError as exc:
        print(f"gpnl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config = cfg.model_dump(mode="json", exclude={"out", "threads"})
    result = {"schema": SCHEMA_VERSION, "kind": cfg.kind, "seed": cfg.seed, "config": config, **payload}
    (out / "result.json").write_text(checks.canonical_json(result))
    metadata = {
        "schema": SCHEMA_VERSION,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "elapsed_s": round(time.perf_counter() - started, 3),
        "threads": cfg.threads,
        "seed": cfg.seed,
    }
    (out / "metadata.json").write_text(checks.canonical_json(metadata))
    status = "passed" if payload["passed"] else "FAILED"
    print(f"gpnl {cfg.kind}: {status}; results in {out}/result.json")
    return EXIT_OK if payload["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
