"""Command-line driver: ``tnsim <command> --config job.json [--inline JSON] --out DIR``.

Every run writes ``result.json`` holding the command, the fully resolved
configuration (seed included), the metrics and the wall time.  Re-running
with ``--config result.json`` reproduces the metrics exactly.  Exit status
is 0 on success, 2 on invalid input and 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import secrets
import sys
import time
from contextlib import nullcontext
from typing import Any, Callable

import numpy as np
import scipy.sparse.linalg

from . import clock, dmrg, peps, sampling, tebd, transfer
from .hamiltonian import (
    NnHamiltonian,
    _matrix_from_json,
    dense_matrix,
    embed,
    exact_diagonalize,
    energy,
    local_operator,
    model_from_json,
)
from .mps import (
    MpsState,
    block_entropy,
    load_mpsz,
    named_state,
    product_state,
    random_mps,
    save_mpsz,
)

COMMANDS = ("dmrg", "tebd", "thermal", "peps", "sample", "clock", "analyze")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
DEGENERATE = "degenerate"


class JobError(ValueError):
    """Invalid job configuration."""


class NumericalFailure(RuntimeError):
    """A solver failed or produced non-finite output."""


# --- config helpers ---------------------------------------------------------


def _load_json_text(text: str, origin: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JobError(f"{origin}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise JobError(f"{origin}: top level must be a JSON object")
    return data


def resolve_config(config_path: str | None, inline: str | None) -> dict:
    """Merge ``--config`` and ``--inline`` (inline keys win)."""
    cfg: dict = {}
    if config_path is not None:
        try:
            with open(config_path) as fh:
                text = fh.read()
        except OSError as exc:
            raise JobError(f"cannot read config {config_path}: {exc.strerror}") from None
        cfg = _load_json_text(text, config_path)
        if "resolved_config" in cfg:  # a previous result.json
            cfg = dict(cfg["resolved_config"])
        cfg.setdefault("base_dir", os.path.dirname(os.path.abspath(config_path)))
    if inline is not None:
        cfg.update(_load_json_text(inline, "--inline"))
    cfg.setdefault("base_dir", os.getcwd())
    if not cfg:
        raise JobError("no configuration given (use --config and/or --inline)")
    return cfg


def _require(cfg: dict, key: str, kind: Callable = None):
    if key not in cfg:
        raise JobError(f"missing required field {key!r}")
    value = cfg[key]
    if kind is not None:
        try:
            return kind(value)
        except (TypeError, ValueError):
            raise JobError(f"field {key!r} has invalid value {value!r}") from None
    return value


def _path(cfg: dict, p: str) -> str:
    """Relative input paths resolve against ``base_dir`` (the config's directory)."""
    return p if os.path.isabs(p) else os.path.join(cfg.get("base_dir", os.getcwd()), p)


def _seed(cfg: dict) -> int:
    if cfg.get("seed") is None:
        cfg["seed"] = secrets.randbits(64)
    seed = int(cfg["seed"])
    if not 0 <= seed < 2**64:
        raise JobError("seed must be a 64-bit unsigned integer")
    cfg["seed"] = seed
    return seed


def _model(cfg: dict) -> NnHamiltonian:
    spec = _require(cfg, "model")
    if isinstance(spec, str):
        with open(_path(cfg, spec)) as fh:
            spec = _load_json_text(fh.read(), spec)
    if not isinstance(spec, dict) or "kind" not in spec or "N" not in spec:
        raise JobError("model needs 'kind' and 'N'")
    return model_from_json(spec)


def _state(cfg: dict, spec: Any, seed: int | None = None) -> MpsState:
    if isinstance(spec, str):
        spec = {"file": spec}
    if not isinstance(spec, dict):
        raise JobError("state must be a file path or an object")
    if "file" in spec:
        return load_mpsz(_path(cfg, spec["file"]))
    kind = spec.get("kind")
    if kind == "product":
        return product_state(spec["config"], spec.get("d", 2))
    if kind == "random":
        return random_mps(
            int(spec["N"]), int(spec["D"]), int(spec.get("d", 2)),
            seed=int(spec.get("seed", seed if seed is not None else 0)),
            boundary=spec.get("boundary", "open"),
        )
    if kind is None:
        raise JobError("state needs 'file' or 'kind'")
    return named_state(kind, spec.get("N"), spec.get("boundary", "open"), spec.get("config"))


def _operator(spec: Any, d: int) -> np.ndarray:
    if isinstance(spec, str):
        return local_operator(spec, d)
    return _matrix_from_json(spec)


def _cplx(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


# --- commands ----------------------------------------------------------------


def cmd_dmrg(cfg: dict, out: str) -> dict:
    H = _model(cfg)
    seed = _seed(cfg)
    opts = dmrg.DmrgOptions(
        D_max=int(cfg.setdefault("D_max", 16)),
        max_sweeps=int(cfg.setdefault("max_sweeps", 20)),
        energy_tol=float(cfg.setdefault("energy_tol", 1e-10)),
        seed=seed,
    )
    rep = dmrg.run_dmrg(H, opts)
    save_mpsz(rep.state, os.path.join(out, "state.mpsz"))
    metrics = {
        "energy": rep.energy,
        "energy_history": rep.energy_history,
        "converged": rep.converged,
        "sweeps_used": rep.sweeps_used,
        "bond_dims": rep.state.bond_dims,
    }
    if cfg.get("compare_ed"):
        metrics["ed_energy"] = exact_diagonalize(H, k=1).ground_energy
    return metrics


def _observables(cfg: dict, d: int) -> list[tuple[str, list[tuple[int, np.ndarray]]]]:
    out = []
    for k, ob in enumerate(cfg.get("observables", [])):
        try:
            names, sites = ob["ops"], ob["sites"]
        except (KeyError, TypeError):
            raise JobError(f"observables[{k}] needs 'ops' and 'sites'") from None
        if len(names) != len(sites):
            raise JobError(f"observables[{k}]: ops and sites differ in length")
        label = "".join(f"{n}{s}" for n, s in zip(names, sites))
        out.append((label, [(int(s), _operator(n, d)) for n, s in zip(names, sites)]))
    return out


def cmd_tebd(cfg: dict, out: str) -> dict:
    H = _model(cfg)
    state = _state(cfg, _require(cfg, "state"), cfg.get("seed"))
    t = _require(cfg, "t", float)
    M = _require(cfg, "M", int)
    D_max = cfg.setdefault("D_max", None)
    tol = float(cfg.setdefault("tol", tebd.DEFAULT_TOL))
    mode = cfg.setdefault("mode", "real")
    obs = _observables(cfg, H.d)
    every = int(cfg.setdefault("record_every", max(1, M // 20)))
    rows = []

    def record(step, st, cumulative):
        if step % every == 0 or step == M:
            for name, ops in obs:
                rows.append([step * t / M, name, transfer.expectation(st, ops).real, cumulative])

    record(0, state, 0.0)
    final, cumulative = tebd.evolve(state, H, t, M, D_max, tol, mode, record)
    _write_csv(os.path.join(out, "observables.csv"), ["time", "observable", "value", "truncation"], rows)
    save_mpsz(final, os.path.join(out, "state.mpsz"))
    metrics = {
        "cumulative_discarded": cumulative,
        "bond_dims": final.bond_dims,
        "energy": energy(final, H),
        "observables": {n: transfer.expectation(final, ops).real for n, ops in obs},
    }
    return metrics


def cmd_thermal(cfg: dict, out: str) -> dict:
    H = _model(cfg)
    beta = _require(cfg, "beta", float)
    M = int(cfg.setdefault("M", 200))
    D_max = cfg.setdefault("D_max", None)
    rho = tebd.thermal_mpdo(H, beta, M, D_max)
    obs = _observables(cfg, H.d)
    values = {n: rho.expectation(ops).real for n, ops in obs}
    metrics: dict = {"log_trace": rho.log_scale + math.log(abs(rho._contract())),
                     "bond_dims": rho.bond_dims, "observables": values}
    if cfg.get("compare_exact"):
        m = dense_matrix(H)
        w, v = np.linalg.eigh(m)
        p = np.exp(-beta * (w - w[0]))
        exact = {}
        for n, ops in obs:
            o = np.eye(H.dim, dtype=complex)
            for s, op in ops:
                o = o @ embed(op, [s] if op.shape[0] == H.d else [s, s + 1], H.N, H.d).toarray()
            diag = np.einsum("ij,jk,ki->i", v.conj().T, o, v).real
            exact[n] = float(p @ diag / p.sum())
        metrics["exact_observables"] = exact
    _write_csv(os.path.join(out, "observables.csv"), ["observable", "value"], [[n, x] for n, x in values.items()])
    return metrics


def _lattice(cfg: dict) -> peps.PepsState:
    spec = _require(cfg, "lattice")
    if isinstance(spec, str):
        return peps.load_pepsz(_path(cfg, spec))
    kind = spec.get("kind")
    if kind == "ising":
        return peps.ising_peps(float(spec["beta"]), int(spec["R"]), int(spec["C"]))
    if kind == "random":
        return peps.random_peps(int(spec["R"]), int(spec["C"]), int(spec["D"]),
                                int(spec.get("d", 2)), seed=int(spec.get("seed", cfg.get("seed", 0))))
    if "file" in spec:
        return peps.load_pepsz(_path(cfg, spec["file"]))
    raise JobError("lattice needs kind 'ising' or 'random', or 'file'")


def cmd_peps(cfg: dict, out: str) -> dict:
    p = _lattice(cfg)
    plan = peps.BoundaryPlan(
        chi=int(cfg.setdefault("chi", 4 * p.max_bond**2)),
        sweep_direction=cfg.setdefault("sweep_direction", "left_to_right"),
        truncation_tol=float(cfg.setdefault("truncation_tol", 0.0)),
    )
    norm, trunc = peps.boundary_contract(p, plan)
    metrics: dict = {"norm": _cplx(norm), "truncation": trunc, "observables": {}}
    rows = []
    for k, ob in enumerate(cfg.get("observables", [])):
        ins = [(int(r), int(c), _operator(n, p.phys_dim)) for n, (r, c) in zip(ob["ops"], ob["sites"])]
        rep = peps.expectation_report(p, ins, plan)
        label = "".join(f"{n}({r},{c})" for n, (r, c) in zip(ob["ops"], ob["sites"]))
        metrics["observables"][label] = rep.value
        rows.append([label, rep.value, rep.imag_residue, rep.truncation])
    if cfg.get("exact"):
        metrics["exact_norm"] = _cplx(peps.exact_contract(p))
    peps.save_pepsz(p, os.path.join(out, "state.pepsz"))
    _write_csv(os.path.join(out, "observables.csv"), ["observable", "value", "imag_residue", "truncation"], rows)
    return metrics


def cmd_sample(cfg: dict, out: str) -> dict:
    seed = _seed(cfg)
    state = _state(cfg, _require(cfg, "state"), seed)
    site = _require(cfg, "site", int)
    n = _require(cfg, "n", int)
    op = _operator(_require(cfg, "operator"), state.phys_dims[site])
    rep = sampling.estimate_local(state, op, site, n, seed)
    _write_csv(os.path.join(out, "batches.csv"), ["batch", "estimate"],
               [[k, x] for k, x in enumerate(rep.batch_estimates)])
    metrics = {"estimate": rep.estimate, "std_error": rep.std_error, "n_samples": rep.n_samples,
               "imag_estimate": rep.imag_estimate}
    if cfg.get("compare_exact"):
        metrics["exact"] = transfer.expectation(state, [(site, op)]).real
    return metrics


def cmd_clock(cfg: dict, out: str) -> dict:
    spec = _require(cfg, "circuit")
    if isinstance(spec, str):
        with open(_path(cfg, spec)) as fh:
            spec = _load_json_text(fh.read(), spec)
    circ = clock.circuit_from_json(spec)
    inst = clock.compile(circ)
    w, v = inst.ground(min(6, inst.hamiltonian.shape[0]))
    kernel = int(np.count_nonzero(np.abs(np.linalg.eigvalsh(inst.h_prop)) < 1e-10))
    metrics = {
        "ground_energy": float(w[0]),
        "spectrum_head": [float(x) for x in w],
        "accepting": bool(w[0] <= cfg.setdefault("accept_tol", 1e-10)),
        "prop_kernel_dim": kernel,
        "dimension": int(inst.hamiltonian.shape[0]),
    }
    if cfg.get("proof") is not None:
        proof = np.asarray(cfg["proof"], dtype=complex)
        h = clock.history_state(circ, proof / np.linalg.norm(proof))
        metrics["history_energy"] = float((h.conj() @ inst.hamiltonian @ h).real)
        metrics["acceptance_probability"] = clock.acceptance_probability(circ, proof / np.linalg.norm(proof))
    return metrics


def analyze_rows(state: MpsState, requests: list[dict]) -> list[list]:
    """One row ``(quantity, args, value_re, value_im)`` per requested value."""
    rows: list[list] = []
    d = state.phys_dims[0]
    for k, req in enumerate(requests):
        q = req.get("quantity") if isinstance(req, dict) else None
        if q == "entropy":
            cuts = req.get("cuts", "all")
            cuts = range(1, state.N) if cuts == "all" else cuts
            for c in cuts:
                rows.append(["entropy", f"cut={int(c)}", block_entropy(state, int(c)), 0.0])
        elif q == "correlation":
            p, qop = (_operator(o, d) for o in req["ops"])
            i, j = int(req["i"]), int(req["j"])
            conn = bool(req.get("connected", False))
            z = transfer.correlator(state, p, qop, i, j, connected=conn)
            rows.append(["correlation" + ("_connected" if conn else ""),
                         f"{req['ops'][0]}{i};{req['ops'][1]}{j}", z.real, z.imag])
        elif q == "correlation_length":
            site = int(req.get("site", state.N // 2))
            xi = transfer.correlation_length(state.tensors[site])
            rows.append(["correlation_length", f"site={site}", DEGENERATE if math.isinf(xi) else xi, 0.0])
        elif q == "expectation":
            ops = [(int(s), _operator(n, state.phys_dims[int(s)])) for n, s in req["ops"]]
            z = transfer.expectation(state, ops)
            rows.append(["expectation", ";".join(f"{n}{s}" for n, s in req["ops"]), z.real, z.imag])
        else:
            raise JobError(f"requests[{k}]: unknown quantity {q!r}")
    return rows


def cmd_analyze(cfg: dict, out: str) -> dict:
    state = _state(cfg, _require(cfg, "state"), cfg.get("seed"))
    requests = _require(cfg, "requests")
    if not isinstance(requests, list):
        raise JobError("requests must be a list")
    try:
        rows = analyze_rows(state, requests)
    except (KeyError, TypeError) as exc:
        raise JobError(f"malformed request: {exc}") from None
    _write_csv(os.path.join(out, "analysis.csv"), ["quantity", "args", "value_re", "value_im"], rows)
    return {"rows": [[r[0], r[1], r[2], r[3]] for r in rows]}


HANDLERS = {
    "dmrg": cmd_dmrg,
    "tebd": cmd_tebd,
    "thermal": cmd_thermal,
    "peps": cmd_peps,
    "sample": cmd_sample,
    "clock": cmd_clock,
    "analyze": cmd_analyze,
}


def _threads():
    value = os.environ.get("TNSIM_THREADS")
    if value is None:
        return nullcontext()
    try:
        n = int(value)
        if n < 1:
            raise ValueError
    except ValueError:
        raise JobError("TNSIM_THREADS must be a positive integer") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _finite(x) -> bool:
    if isinstance(x, float):
        return math.isfinite(x)
    if isinstance(x, dict):
        return all(_finite(v) for v in x.values())
    if isinstance(x, list):
        return all(_finite(v) for v in x)
    return True


def run(command: str, cfg: dict, out: str) -> dict:
    """Execute one job and write ``result.json`` into ``out``; returns the result."""
    if command not in HANDLERS:
        raise JobError(f"unknown command {command!r}")
    os.makedirs(out, exist_ok=True)
    work = dict(cfg)
    work["base_dir"] = os.path.abspath(work.get("base_dir", os.getcwd()))
    _seed(work)
    start = time.perf_counter()
    with _threads():
        metrics = HANDLERS[command](work, out)
    wall = time.perf_counter() - start
    if not _finite(metrics):
        raise NumericalFailure("non-finite metric")
    result = {
        "command": command,
        "resolved_config": work,
        "seed": work.get("seed"),
        "metrics": metrics,
        "wall_time_s": wall,
    }
    with open(os.path.join(out, "result.json"), "w") as fh:
        json.dump(result, fh, indent=2)
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tnsim", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="job JSON file (a previous result.json also works)")
    parser.add_argument("--inline", help="JSON object merged over the config file")
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.config, args.inline)
        result = run(args.command, cfg, args.out)
    except (NumericalFailure, FloatingPointError, np.linalg.LinAlgError,
            scipy.sparse.linalg.ArpackNoConvergence, RuntimeError) as exc:
        # checked first: LinAlgError is a ValueError subclass
        print(f"tnsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (JobError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"tnsim: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps({"command": result["command"], "seed": result["seed"],
                      "out": os.path.abspath(args.out)}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
