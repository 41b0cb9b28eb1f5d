"""Command-line experiment runner.

    waveprecond condnum|solve|circuit-audit|polyinv|direct-probe
        [--manifest PATH] [--out DIR] [--seed INT] [--jobs INT] [--set KEY=VALUE ...]

Manifests are flat ``key = value`` files (``#`` starts a comment).  Every
output file begins with a line carrying the SHA-256 of the resolved
manifest, and the resolved manifest itself is written next to the results.
Exit codes: 0 success, 1 invalid input, 2 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from waveprecond import blockenc, dwt, fdm, observable, polyapprox, precond, qmi, qsim, solver, svgplot

EXIT_OK, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2


class InvalidInput(Exception):
    pass


class VerificationFailure(Exception):
    pass


def _ints(v: str) -> list[int]:
    return [int(s) for s in v.split(",") if s.strip()]


def _floats(v: str) -> list[float]:
    return [float(s) for s in v.split(",") if s.strip()]


def _names(v: str) -> list[str]:
    return [s.strip() for s in v.split(",") if s.strip()]


def _opt_int(v: str) -> Optional[int]:
    return None if v in ("", "none") else int(v)


def _opt_float(v: str) -> Optional[float]:
    return None if v in ("", "none") else float(v)


COMMON = {"seed": ("0", int), "jobs": ("1", int)}

SCHEMAS: dict[str, dict[str, tuple[str, Callable]]] = {
    "condnum": {
        "operators": ("L1,L2,L3", _names),
        "wavelets": ("db3", _names),
        "n_min": ("4", int),
        "n_max": ("10", int),
        "kernel_policy": ("deflate_constant", str),
    },
    "solve": {
        "operator": ("L2", str),
        "wavelet": ("db3", str),
        "n": ("4", int),
        "d": ("1", int),
        "rhs": ("auto", str),
        "kernel_policy": ("deflate_constant", str),
        "route": ("oracle_dilation", str),
        "t": ("none", _opt_int),
        "eps": ("none", _opt_float),
        "alpha": ("none", _opt_float),
        "mode": ("ideal", str),
        "observables": ("identity,grid_cos,nearest_neighbor", _names),
        "tolerance": ("1e-6", float),
    },
    "circuit-audit": {
        "n_min": ("2", int),
        "n_max": ("8", int),
        "max_d": ("2,3", _ints),
        "max_n_min": ("2", int),
        "max_n_max": ("6", int),
        "comp_n": ("4", int),
    },
    "polyinv": {
        "c_values": ("4,32", _floats),
        "eps_values": ("1e-2,1e-3,1e-4", _floats),
    },
    "direct-probe": {
        "n_min": ("3", int),
        "n_max": ("8", int),
        "wavelet": ("db3", str),
    },
}


def parse_manifest(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"manifest line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k in out:
            raise InvalidInput(f"manifest line {lineno}: duplicate key {k!r}")
        out[k] = v
    return out


def resolve(command: str, raw: dict[str, str]) -> tuple[dict, dict[str, str]]:
    """Typed values and the resolved string form (defaults filled in, sorted keys)."""
    schema = {**SCHEMAS[command], **COMMON}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise InvalidInput(f"unknown manifest keys for {command}: {', '.join(unknown)}")
    resolved = {k: raw.get(k, default) for k, (default, _) in schema.items()}
    typed = {}
    for k, (_, conv) in schema.items():
        try:
            typed[k] = conv(resolved[k])
        except ValueError as exc:
            raise InvalidInput(f"bad value for {k!r}: {resolved[k]!r} ({exc})") from None
    return typed, dict(sorted(resolved.items()))


def manifest_text(command: str, resolved: dict[str, str]) -> str:
    return f"command = {command}\n" + "".join(f"{k} = {v}\n" for k, v in resolved.items())


def manifest_hash(command: str, resolved: dict[str, str]) -> str:
    return hashlib.sha256(manifest_text(command, resolved).encode()).hexdigest()


class Writer:
    def __init__(self, out: Path, digest: str):
        self.out = out
        self.digest = digest
        self.files: list[Path] = []
        out.mkdir(parents=True, exist_ok=True)

    @property
    def header(self) -> str:
        return f"manifest-sha256: {self.digest}"

    def csv(self, name: str, columns, rows) -> Path:
        buf = io.StringIO()
        buf.write(f"# {self.header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in ([r[c] for c in columns] if isinstance(r, dict) else r)])
        return self._write(name, buf.getvalue())

    def text(self, name: str, body: str) -> Path:
        return self._write(name, f"# {self.header}\n{body}")

    def svg(self, name: str, body: str) -> Path:
        return self._write(name, body)

    def _write(self, name: str, body: str) -> Path:
        p = self.out / name
        p.write_text(body)
        self.files.append(p)
        return p


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _fit_line(xs, ys) -> tuple[float, float, float]:
    """slope, intercept, max absolute residual of a least-squares line."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    slope, icpt = np.polyfit(xs, ys, 1)
    return float(slope), float(icpt), float(np.max(np.abs(ys - (slope * xs + icpt))))


# subcommands

def cmd_condnum(m: dict, w: Writer) -> None:
    if m["n_min"] < 2 or m["n_max"] < m["n_min"]:
        raise InvalidInput("need 2 <= n_min <= n_max")
    for op in m["operators"]:
        try:
            fdm.OperatorKind(op)
        except ValueError:
            raise InvalidInput(f"unknown operator {op!r}") from None
    for name in m["wavelets"]:
        try:
            dwt.wavelet_from_name(name)
        except ValueError as exc:
            raise InvalidInput(str(exc)) from None
    policy = m["kernel_policy"]
    if policy not in ("none", "deflate_constant", "threshold"):
        raise InvalidInput(f"unknown kernel_policy {policy!r}")
    rows = precond.sweep_condition_numbers(m["operators"], m["wavelets"], range(m["n_min"], m["n_max"] + 1),
                                           kernel_policy=policy, jobs=m["jobs"])
    w.text("condnum.csv", precond.sweep_to_csv(rows))
    series = []
    for op in m["operators"]:
        for name in m["wavelets"]:
            sub = [r for r in rows if r["operator"] == fdm.OperatorKind(op).value and r["wavelet"] == name]
            Ns = [r["N"] for r in sub]
            if name == m["wavelets"][0]:
                series.append((f"{op} raw", Ns, [r["kappa_raw"] for r in sub], True))
            series.append((f"{op} {name}", Ns, [r["kappa_precond"] for r in sub], False))
    w.svg("condnum.svg", svgplot.loglog_svg(series, "Condition numbers with and without preconditioning",
                                            "N", "condition number", header=w.header))
    fits = []
    for op in m["operators"]:
        sub = [r for r in rows if r["operator"] == fdm.OperatorKind(op).value and r["wavelet"] == m["wavelets"][0]]
        if len(sub) >= 2:
            slope, _, _ = _fit_line([r["n"] * r["d"] for r in sub], np.log2([r["kappa_raw"] for r in sub]))
            fits.append({"operator": op, "raw_slope_log2kappa_vs_log2N": slope})
    w.csv("condnum_fits.csv", ["operator", "raw_slope_log2kappa_vs_log2N"], fits)


def _observable(name: str, n: int, d: int):
    lib = observable.library(n, d)
    if name not in lib:
        raise InvalidInput(f"unknown observable {name!r}; choose from {', '.join(lib)}")
    return lib[name]


def cmd_solve(m: dict, w: Writer) -> None:
    identity = m["operator"] == "identity"
    try:
        kind = fdm.OperatorKind.L3 if identity else fdm.OperatorKind(m["operator"])
        spec = dwt.wavelet_from_name(m["wavelet"])
        cfg = qmi.QmiConfig(m["route"], m["t"], m["eps"], m["alpha"])
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    if m["mode"] not in ("ideal", "faithful"):
        raise InvalidInput(f"unknown mode {m['mode']!r}")
    n, d = m["n"], m["d"]
    if (kind is fdm.OperatorKind.LAPLACE2D) != (d == 2):
        raise InvalidInput("Laplace2D is the only d = 2 operator")
    N = 2 ** (n * d)
    try:
        profile = m["rhs"]
        if profile == "auto":
            profile = "constant_free" if kind in solver.NEGATIVE_KINDS else "gaussian_samples"
        rhs = fdm.build_rhs(profile, N, d=d)
        if identity:
            sys_ = fdm.DiscretizedSystem(A=np.eye(N), b=rhs, n=n, d=d, kind=kind)
        else:
            sys_ = fdm.discretize(kind.value, n, rhs)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    if sys_.kernel_dim and m["kernel_policy"] != "deflate_constant":
        raise InvalidInput(f"{kind.value} is singular: the solver needs kernel_policy = deflate_constant")
    if not spec.orthogonal:
        raise InvalidInput("the quantum pipeline needs an orthogonal wavelet")
    W = dwt.build_transform_matrix(spec, n)
    P = precond.build_preconditioner(n, d)
    rows = []
    for name in m["observables"]:
        M = _observable(name, n, d)
        try:
            rep = solver.end_to_end_expectation(sys_, W, P, cfg, M, m["mode"], m["seed"] if m["mode"] == "faithful"
                                                else None)
        except ValueError as exc:
            raise InvalidInput(str(exc)) from None
        row = rep.as_row()
        row["observable"] = name
        if identity:
            row["operator"] = "identity"
        row["seed"] = m["seed"]
        row["budget"] = max(row["budget"], m["tolerance"])
        rows.append(row)
    cols = ["operator", "wavelet", "n", "d", "route", "t", "observable", "xi", "p_succ", "rounds",
            "quantum_value", "classical_value", "abs_error", "budget", "seed"]
    w.csv("solve.csv", cols, rows)
    bad = [r["observable"] for r in rows if not r["abs_error"] <= r["budget"]]
    if bad:
        raise VerificationFailure(f"abs_error above budget for {', '.join(bad)}")


def cmd_circuit_audit(m: dict, w: Writer) -> None:
    if m["n_min"] < 1 or m["n_max"] < m["n_min"]:
        raise InvalidInput("need 1 <= n_min <= n_max")
    rows, failures = [], []
    ns = list(range(m["n_min"], m["n_max"] + 1))
    for n in ns:
        c = blockenc.controlled_u_pm(n, "+")
        cen = c.census()
        rows.append({"circuit": "controlled_U+", "n": n, "d": 1, "qubits": c.num_qubits,
                     "toffoli": cen["Toffoli"], "cnot": cen["CNOT"], "total": len(c)})
    slope, icpt, resid = _fit_line(ns, [r["toffoli"] for r in rows])
    fits = [{"circuit": "controlled_U+", "d": 1, "slope": slope, "intercept": icpt, "max_residual": resid,
             "constant_c": ""}]
    if resid >= 1.0:
        failures.append("controlled-U Toffoli count is not linear in n")
    max_rows = []
    for d in m["max_d"]:
        for n in range(m["max_n_min"], m["max_n_max"] + 1):
            c = blockenc.max_circuit(n, d)
            cen = c.census()
            r = {"circuit": "MAX", "n": n, "d": d, "qubits": c.num_qubits, "toffoli": cen["Toffoli"],
                 "cnot": cen["CNOT"], "total": len(c)}
            rows.append(r)
            max_rows.append(r)
    if max_rows:
        cmax = max(r["toffoli"] / (r["d"] * r["n"]) for r in max_rows)
        for d in m["max_d"]:
            sub = [r for r in max_rows if r["d"] == d]
            if len(sub) >= 2:
                s, i, res = _fit_line([r["n"] for r in sub], [r["toffoli"] for r in sub])
                fits.append({"circuit": "MAX", "d": d, "slope": s, "intercept": i, "max_residual": res,
                             "constant_c": cmax})
    n = m["comp_n"]
    comp = blockenc.comparator_circuit(n)
    clean = qsim.ancillas_clean(comp, list(comp.roles["x"] + comp.roles["y"]), list(comp.clean))
    rows.append({"circuit": "COMP", "n": n, "d": 1, "qubits": comp.num_qubits, "toffoli": comp.count("Toffoli"),
                 "cnot": comp.count("CNOT"), "total": len(comp)})
    if not clean:
        failures.append("comparator leaves its workspace dirty")
    cols = ["circuit", "n", "d", "qubits", "toffoli", "cnot", "total"]
    w.csv("census.csv", cols, rows)
    w.csv("census_fits.csv", ["circuit", "d", "slope", "intercept", "max_residual", "constant_c"], fits)
    w.csv("ancilla_checks.csv", ["circuit", "n", "ancillas_clean"], [{"circuit": "COMP", "n": n,
                                                                     "ancillas_clean": clean}])
    if failures:
        raise VerificationFailure("; ".join(failures))


def _tag(v: float) -> str:
    return f"{v:g}".replace("+", "")


def cmd_polyinv(m: dict, w: Writer) -> None:
    summary, curve, failures = [], [], []
    for c in m["c_values"]:
        for eps in m["eps_values"]:
            try:
                s = polyapprox.inverse_series(c, eps)
            except ValueError as exc:
                raise InvalidInput(str(exc)) from None
            w.csv(f"coeffs_c{_tag(c)}_eps{_tag(eps)}.csv", ["ell", "coefficient"], polyapprox.coefficient_rows(s))
            poly = polyapprox.matrix_inverse_polynomial_fn(c, eps)
            row = {"c": c, "eps": eps, "ell_log": s.ell_log, "ell_max": s.ell_max,
                   "ell_min": polyapprox.minimal_truncation(c, eps), "series_error": s.grid_error(),
                   "series_target": s.target, "pmi_degree": poly.degree, "pmi_error": poly.grid_error(),
                   "pmi_bound": eps / c, "pmi_max_abs": poly.max_magnitude(), "pmi_odd_error": poly.oddness_error()}
            summary.append(row)
            if row["series_error"] > row["series_target"] or row["pmi_error"] > row["pmi_bound"] \
                    or row["pmi_max_abs"] > 1 + 1e-12:
                failures.append(f"c={c:g}, eps={eps:g}")
        x = np.linspace(1.0 / c, 1.0, polyapprox.GRID_POINTS)
        z0 = 1.0 + 2.0 / c
        full = polyapprox.inverse_coefficients(z0, polyapprox.inverse_series(c, min(m["eps_values"])).ell_max)
        for ell in range(len(full)):
            err = np.max(np.abs(np.polynomial.chebyshev.chebval(2 * x - z0, full[: ell + 1]) - 0.5 / x))
            curve.append({"c": c, "degree": ell, "grid_error": float(err)})
    w.csv("polyinv_summary.csv", list(summary[0]) if summary else [], summary)
    w.csv("polyinv_error_vs_degree.csv", ["c", "degree", "grid_error"], curve)
    if failures:
        raise VerificationFailure("polynomial checks failed for " + "; ".join(failures))


def cmd_direct_probe(m: dict, w: Writer) -> None:
    if m["n_min"] < 1 or m["n_max"] < m["n_min"]:
        raise InvalidInput("need 1 <= n_min <= n_max")
    try:
        spec = dwt.wavelet_from_name(m["wavelet"])
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    rng = np.random.default_rng(m["seed"])
    rows = []
    for n in range(m["n_min"], m["n_max"] + 1):
        N = 2**n
        W = dwt.build_transform_matrix(spec, n).W
        edge = solver.direct_approach_probability(W.T[:, N - 1], W)
        uniform = solver.direct_approach_probability(W.T @ np.ones(N), W)
        rand = solver.direct_approach_probability(rng.standard_normal(N), W)
        P = precond.build_preconditioner(n).diag
        rows.append({"n": n, "N": N, "p_edge": edge, "bound": (2.0 / N) ** 2, "p_uniform": uniform,
                     "closed_form_uniform": float(np.sum(P**2) / N), "p_random": rand})
    w.csv("direct_probe.csv", list(rows[0]), rows)
    fits = []
    for key in ("p_edge", "p_uniform", "p_random"):
        if len(rows) >= 2:
            s, _, _ = _fit_line(np.log2([r["N"] for r in rows]), np.log2([r[key] for r in rows]))
            fits.append({"series": key, "loglog_slope": s})
    w.csv("direct_probe_fits.csv", ["series", "loglog_slope"], fits)
    bad = [r["n"] for r in rows if abs(r["p_edge"] - r["bound"]) > 1e-12]
    if bad:
        raise VerificationFailure(f"edge probability differs from (2/N)^2 at n = {bad}")


COMMANDS = {"condnum": cmd_condnum, "solve": cmd_solve, "circuit-audit": cmd_circuit_audit,
            "polyinv": cmd_polyinv, "direct-probe": cmd_direct_probe}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="waveprecond", description="Wavelet-preconditioned linear-system experiments.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--manifest", type=Path, help="flat key = value manifest file")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, help="override the manifest seed")
    p.add_argument("--jobs", type=int, help="worker processes for sweeps")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one manifest key")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = parse_manifest(args.manifest.read_text()) if args.manifest else {}
        for item in args.set:
            if "=" not in item:
                raise InvalidInput(f"--set expects KEY=VALUE, got {item!r}")
            k, v = (s.strip() for s in item.split("=", 1))
            raw[k] = v
        if args.seed is not None:
            raw["seed"] = str(args.seed)
        if args.jobs is not None:
            raw["jobs"] = str(args.jobs)
        typed, resolved = resolve(args.command, raw)
        if typed["jobs"] < 1:
            raise InvalidInput("jobs must be >= 1")
        digest = manifest_hash(args.command, resolved)
        writer = Writer(args.out, digest)
        writer.text("manifest.resolved.txt", manifest_text(args.command, resolved))
        COMMANDS[args.command](typed, writer)
    except (InvalidInput, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    for f in writer.files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
