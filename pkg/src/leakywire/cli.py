"""Command-line front end.

    leakywire check     CONFIG [--set key=value ...]
    leakywire spectrum  CONFIG
    leakywire sweep     CONFIG
    leakywire validate  CONFIG
    leakywire trial     CONFIG

Exit codes: 0 success, 1 configuration error, 2 assumption violation,
3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, build_curve, load_config, solver_numerics
from .curves import SampleSpec, check_a2
from .ditch import convergence_study, make_profile
from .errors import AssumptionViolation, ConfigError, ConvergenceError, LeakyWireError
from .io import write_csv, write_json
from .solver import gaussian_trial, reconstruct_eigenfunction, solve_spectrum, sweep_lambda

log = logging.getLogger("leakywire")


def _header(cfg):
    return {"schema_version": SCHEMA_VERSION, "config": cfg}


def _out_dir(cfg):
    d = Path(cfg["output_dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_check(cfg, base_dir=None):
    """Assumption report; raises AssumptionViolation after writing it."""
    curve = build_curve(cfg["curve"], base_dir)
    c = cfg["check"]
    spec = SampleSpec(n_radial=c["n_radial"], horizon=c["horizon"])
    report = check_a2(curve, omega=c["omega"], sample_spec=spec)
    ok = report.c_hat > c["floor"]
    out = {**_header(cfg), "a1_passed": ok, "report": report.to_dict()}
    path = write_json(_out_dir(cfg) / "assumption_report.json", out)
    print(f"{curve!r}: c_hat={report.c_hat:.6g} (worst pair {report.worst_pair[0]:.4g}, "
          f"{report.worst_pair[1]:.4g}); mu_hat={report.mu_hat:.3g}, d_hat={report.d_hat:.3g}, "
          f"mu>1/2: {report.a2_satisfied_with_mu_above_half}")
    if not ok:
        raise AssumptionViolation(f"chord/arc ratio {report.c_hat:.3g} below floor {c['floor']}",
                                  report=report.to_dict())
    return report, path


def _spectrum(cfg, curve):
    return solve_spectrum(curve, cfg["alpha"], solver_numerics(cfg))


def _dedupe(warnings):
    seen, out = set(), []
    for w in warnings:
        key = (w.get("type"), w.get("branch"), round(w.get("kappa", 0.0), 6))
        if key not in seen:
            seen.add(key)
            out.append(w)
    return out


def cmd_spectrum(cfg, base_dir=None):
    """Bound states; writes states.json, then raises ConvergenceError if any state is unconverged."""
    curve = build_curve(cfg["curve"], base_dir)
    res = _spectrum(cfg, curve)
    out_dir = _out_dir(cfg)
    doc = {
        **_header(cfg),
        "alpha": res.alpha,
        "threshold": res.threshold,
        "branches_at_threshold": res.branches_at_threshold,
        "states": [s.to_dict() for s in res.states],
        "warnings": _dedupe(res.warnings),
    }
    path = write_json(out_dir / "states.json", doc)
    ef = cfg["eigenfunction"]
    if ef["enabled"] and res.states:
        x = np.linspace(ef["x"][0], ef["x"][1], int(ef["x"][2]))
        y = np.linspace(ef["y"][0], ef["y"][1], int(ef["y"][2]))
        for st in res.states:
            fs = reconstruct_eigenfunction(curve, st, x, y)
            X, Y = np.meshgrid(x, y)
            write_csv(out_dir / f"eigenfunction_{st.index}.csv", ["x", "y", "psi"],
                      zip(X.ravel(), Y.ravel(), fs.psi.ravel()),
                      {**_header(cfg), "skipped_points": fs.skipped})
    if cfg["debug"]["dump_matrices"]:
        from .bs import assemble, build_grid
        for st in res.states:
            assemble(curve, cfg["alpha"], st.kappa0, build_grid(st.L, st.N),
                     dump_path=out_dir / f"bs_matrix_{st.index}.npy")
    for s in res.states:
        print(f"state {s.index}: E = {s.energy:.12g} (kappa0 = {s.kappa0:.12g}, L = {s.L:.4g}, N = {s.N}, "
              f"converged = {s.converged})")
    if not res.states:
        print(f"no bound states below the threshold {res.threshold:.6g}")
    bad = [s.index for s in res.states if not s.converged]
    if bad:
        # outputs are already on disk; the exit code flags them
        raise ConvergenceError(f"states {bad} did not meet the refinement tolerance", achieved=doc["warnings"])
    return res, path


def _kappa_grid(sw):
    if "kappa" in sw and sw["kappa"]:
        return np.sort(np.asarray(sw["kappa"], dtype=float))
    if sw["spacing"] == "log":
        return np.geomspace(sw["kappa_min"], sw["kappa_max"], sw["n_kappa"])
    return np.linspace(sw["kappa_min"], sw["kappa_max"], sw["n_kappa"])


def cmd_sweep(cfg, base_dir=None):
    curve = build_curve(cfg["curve"], base_dir)
    sw = cfg["sweep"]
    table = sweep_lambda(curve, cfg["alpha"], _kappa_grid(sw), m=sw["m"], L=sw["L"], N=sw["N"],
                         a1_floor=cfg["numerics"]["a1_floor"])
    m = table.eigenvalues.shape[1]
    header = ["kappa"] + [f"lambda_{j + 1}" for j in range(m)] + ["alpha_over_2kappa"]
    rows = [[k, *vals, ref] for k, vals, ref in zip(table.kappa, table.eigenvalues, table.reference)]
    path = write_csv(_out_dir(cfg) / "sweep.csv", header, rows,
                     {**_header(cfg), "grid": {"L": table.L, "N": table.N}})
    return table, path


def cmd_validate(cfg, base_dir=None):
    curve = build_curve(cfg["curve"], base_dir)
    v = cfg["validate"]
    res = _spectrum(cfg, curve)
    out_dir = _out_dir(cfg)
    header = ["epsilon", "h", "E0", "E_transverse", "E0_referenced", "n_unknowns", "clipped_fraction"]
    if not res.states:
        write_csv(out_dir / "ditch_convergence.csv", header, [], _header(cfg))
        doc = {**_header(cfg), "verdict": "N/A", "reason": "no bound state to compare", "E_bs": None}
        path = write_json(out_dir / "validation.json", doc)
        print("verdict: N/A (no bound state)")
        return doc, path
    E_bs = res.states[0].energy
    profile = make_profile(v["profile"])
    if abs(profile.alpha - cfg["alpha"]) > 1e-12 * cfg["alpha"]:
        raise ConfigError(f"profile integral {profile.alpha:.12g} differs from alpha {cfg['alpha']:.12g}")
    rep = convergence_study(curve, profile, v["epsilon_list"], box=v["box"], mesh_ratios=v["mesh_ratios"],
                            alpha=cfg["alpha"], E_bs=E_bs, kappa0=res.states[0].kappa0,
                            reference=v["reference"], keep_fields=v["dump_fields"])
    rows = [[r[k] for k in header] for r in rep.rows]
    for i, x, y, psi in rep.fields:
        X, Y = np.meshgrid(x, y)
        write_csv(out_dir / f"ditch_field_{i}.csv", ["x", "y", "psi"], zip(X.ravel(), Y.ravel(), psi.ravel()),
                  {**_header(cfg), "epsilon": rep.rows[i]["epsilon"], "h": rep.rows[i]["h"]})
    write_csv(out_dir / "ditch_convergence.csv", header, rows,
              {**_header(cfg), "extrapolated": rep.extrapolated, "extrapolated_raw": rep.extrapolated_raw,
               "E_bs": E_bs, "box": list(rep.box)})
    verdict = rep.verdict(v["budget"])
    doc = {
        **_header(cfg),
        "verdict": verdict,
        "budget": v["budget"],
        "E_bs": E_bs,
        "extrapolated": rep.extrapolated,
        "extrapolated_raw": rep.extrapolated_raw,
        "reference": rep.reference,
        "rel_error": rep.rel_error,
        "rel_error_raw": abs(rep.extrapolated_raw - E_bs) / abs(E_bs),
        "box": list(rep.box),
        "rows": rep.rows,
    }
    path = write_json(out_dir / "validation.json", doc)
    print(f"E_bs = {E_bs:.10g}, extrapolated = {rep.extrapolated:.10g} "
          f"(rel. error {rep.rel_error:.3e}), verdict: {verdict}")
    return doc, path


def cmd_trial(cfg, base_dir=None):
    curve = build_curve(cfg["curve"], base_dir)
    t = cfg["trial"]
    lams = t.get("lambdas") or np.geomspace(t["lambda_min"], t["lambda_max"], t["n_lambda"])
    reps = gaussian_trial(curve, cfg["alpha"], t["kappa"], lams, L=t["L"], N=t["N"])
    header = ["lambda", "form_gap", "positive", "d_term", "multiplier_term", "multiplier_term_grid"]
    rows = [[r.lambda_width, r.form_gap, r.sign, r.d_term, r.multiplier_term, r.multiplier_term_grid] for r in reps]
    path = write_csv(_out_dir(cfg) / "trial.csv", header, rows, {**_header(cfg), "kappa": t["kappa"]})
    print(f"positive gap for {sum(r.sign for r in reps)} of {len(reps)} widths")
    return reps, path


COMMANDS = {
    "check": cmd_check,
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "trial": cmd_trial,
}


def build_parser():
    p = argparse.ArgumentParser(prog="leakywire", description="Bound states of leaky quantum wires")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=(fn.__doc__ or name).strip().splitlines()[0])
        sp.add_argument("config", nargs="?", help="YAML run configuration")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (dotted path), repeatable")
        sp.add_argument("-o", "--output-dir", help="output directory (overrides output_dir)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = list(args.overrides)
        if args.output_dir:
            overrides.append(f"output_dir={args.output_dir}")
        cfg = load_config(args.config, overrides)
        base_dir = Path(args.config).resolve().parent if args.config else None
        COMMANDS[args.command](cfg, base_dir)
    except LeakyWireError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
