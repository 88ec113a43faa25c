"""Command-line front ends ``transport`` and ``swe``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags. Relative output directories
are placed under ``$VECTRANS_OUTPUT_ROOT`` when that variable is set.
"""

import argparse
import os
import sys

from .assembly import write_fields_vtk
from .harness.config import (
    SWE_KEYS,
    TRANSPORT_KEYS,
    ConfigError,
    load_config,
    resolve_output_dir,
)
from .harness.norms import fit_convergence_slope
from .harness.output import git_revision, write_csv, write_timing
from .harness.runner import (
    DEFAULT_DT,
    PAPER_DT,
    run_swe,
    run_transport,
    transport_config,
)

TIME_CHECK_TOL = 0.05


def _on_off(text):
    return TRANSPORT_KEYS["supg"](text)


def _merge(args, schema, dest_map):
    """Defaults < config file < flags given on the command line."""
    settings = load_config(args.config, schema) if args.config else {}
    for key, dest in dest_map.items():
        val = getattr(args, dest)
        if val is not None:
            settings[key] = val
    return settings


def _require(settings, *keys):
    missing = [k for k in keys if k not in settings]
    if missing:
        raise ConfigError(f"missing required setting(s): {', '.join(missing)}")


def _common_flags(p):
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--scheme", choices=("benchmark", "recovered", "vorticity"))
    p.add_argument("--n", type=int, help="cells per direction (per panel edge on the sphere)")
    p.add_argument("--ladder", type=lambda s: TRANSPORT_KEYS["ladder"](s),
                   help="comma-separated resolutions for a convergence sweep")
    p.add_argument("--dt", type=float, help="time step in seconds")
    p.add_argument("--paper-dt", dest="paper_dt", action="store_const", const=True,
                   help="use the reference time step of the case")
    p.add_argument("--supg", type=_on_off, help="SUPG stabilisation for the vorticity scheme (on/off)")
    p.add_argument("--lambda", dest="lam", type=float, help="SUPG tuning parameter")
    p.add_argument("--geometry", choices=("bilinear", "exact"))
    p.add_argument("--out", help="output directory")
    p.add_argument("--vtk", type=_on_off, help="write VTK snapshots (on/off)")


def _stem(case, scheme, supg, n):
    tag = "" if scheme != "vorticity" or supg else "_nosupg"
    return f"{case}_{scheme}{tag}_n{n}"


# -- transport ---------------------------------------------------------------------


def transport_main(argv=None):
    p = argparse.ArgumentParser(prog="transport", description="Vector transport test cases.")
    p.add_argument("--case", choices=("cylinder", "sphere"))
    _common_flags(p)
    p.add_argument("--snapshots", type=lambda s: TRANSPORT_KEYS["snapshots"](s),
                   help="comma-separated output times in seconds")
    p.add_argument("--time-check", dest="time_check", type=_on_off,
                   help="repeat the coarsest run with half the time step (on/off)")
    args = p.parse_args(argv)
    dest = {"case": "case", "scheme": "scheme", "n": "n", "ladder": "ladder", "dt": "dt",
            "paper_dt": "paper_dt", "supg": "supg", "lambda": "lam", "geometry": "geometry",
            "out": "out", "vtk": "vtk", "snapshots": "snapshots", "time_check": "time_check"}
    try:
        s = _merge(args, TRANSPORT_KEYS, dest)
        _require(s, "case", "scheme")
        return _run_transport(s)
    except (ConfigError, ValueError) as exc:
        print(f"transport: error: {exc}", file=sys.stderr)
        return 2


def _run_transport(s):
    case, scheme = s["case"], s["scheme"]
    dt = PAPER_DT[case] if s.get("paper_dt") else s.get("dt", DEFAULT_DT[case])
    supg, lam = s.get("supg", True), s.get("lambda", 0.5)
    geometry = s.get("geometry", "bilinear")
    ladder = s.get("ladder") or [s.get("n", 16 if case == "cylinder" else 8)]
    out = resolve_output_dir(s.get("out"))
    T = transport_config(case, ladder[0], dt).T
    snaps = s.get("snapshots", [0.0, T / 2, T] if case == "cylinder" else [0.0, T, 2 * T])
    rev = git_revision()
    pairs = []
    for n in ladder:
        r = run_transport(case, scheme, n, dt, geometry, supg, lam,
                          snapshot_times=snaps if s.get("vtk", True) else ())
        stem = _stem(case, scheme, supg, n)
        meta = dict(r.metadata, git_revision=rev)
        write_csv(os.path.join(out, stem + ".csv"),
                  ["case", "scheme", "n", "dt", "steps", "mesh_size", "l2_error", "normalised_l2_error"],
                  [[case, scheme, n, r.dt, r.steps, r.mesh_size, r.error, r.normalised_error]], meta)
        write_timing(os.path.join(out, stem + ".timing.txt"), r.runtime)
        for t, F in sorted(r.snapshots.items()):
            write_fields_vtk(os.path.join(out, f"{stem}_t{t:g}.vtk"), [F], title=f"{stem} t={t:g}")
        print(f"{case} {scheme} n={n} dt={r.dt:g} steps={r.steps} l2_error={r.error:.6e} "
              f"normalised={r.normalised_error:.6e} ({r.runtime:.1f} s)")
        pairs.append((n, r.mesh_size, r.error))
    if len(pairs) >= 3:
        slope = fit_convergence_slope([(h, e) for _, h, e in pairs])
        meta = {"case": case, "scheme": scheme, "dt": dt, "geometry": geometry, "slope": slope,
                "git_revision": rev}
        if s.get("time_check", False):
            r2 = run_transport(case, scheme, ladder[0], dt / 2, geometry, supg, lam)
            change = abs(r2.error - pairs[0][2]) / pairs[0][2]
            meta.update(time_check_n=ladder[0], time_check_change=change,
                        time_check_passed=bool(change < TIME_CHECK_TOL))
            print(f"time step check at n={ladder[0]}: relative change {change:.3e}")
        write_csv(os.path.join(out, f"{case}_{scheme}{'' if supg or scheme != 'vorticity' else '_nosupg'}"
                               "_convergence.csv"),
                  ["n", "mesh_size", "l2_error"], pairs, meta)
        print(f"{case} {scheme} fitted slope {slope:.3f}")
    return 0


# -- shallow water -----------------------------------------------------------------


def swe_main(argv=None):
    p = argparse.ArgumentParser(prog="swe", description="Shallow-water test cases on the cubed sphere.")
    p.add_argument("--case", choices=("williamson2", "galewsky"))
    _common_flags(p)
    p.add_argument("--days", type=float, help="simulated days")
    p.add_argument("--snapshot-days", dest="snapshot_days", type=lambda s: SWE_KEYS["snapshot_days"](s),
                   help="comma-separated snapshot times in days")
    p.add_argument("--diag-every", dest="diag_every", type=int, help="steps between diagnostics")
    p.add_argument("--outer", type=int, help="outer iterations per step")
    p.add_argument("--inner", type=int, help="inner iterations per outer iteration")
    args = p.parse_args(argv)
    dest = {"case": "case", "scheme": "scheme", "n": "n", "ladder": "ladder", "dt": "dt",
            "paper_dt": "paper_dt", "days": "days", "supg": "supg", "lambda": "lam",
            "geometry": "geometry", "out": "out", "vtk": "vtk", "snapshot_days": "snapshot_days",
            "diag_every": "diag_every", "outer": "outer", "inner": "inner"}
    try:
        s = _merge(args, SWE_KEYS, dest)
        _require(s, "case", "scheme")
        return _run_swe(s)
    except (ConfigError, ValueError) as exc:
        print(f"swe: error: {exc}", file=sys.stderr)
        return 2


def _run_swe(s):
    case, scheme = s["case"], s["scheme"]
    dt = PAPER_DT[case] if s.get("paper_dt") else s.get("dt", DEFAULT_DT[case])
    days = s.get("days", 5.0 if case == "williamson2" else 6.0)
    supg, lam = s.get("supg", True), s.get("lambda", 0.5)
    geometry = s.get("geometry", "bilinear")
    ladder = s.get("ladder") or [s.get("n", 8)]
    out = resolve_output_dir(s.get("out"))
    snaps = s.get("snapshot_days", [0.0, days]) if s.get("vtk", True) else ()
    rev = git_revision()
    rows = []
    for n in ladder:
        r = run_swe(case, scheme, n, dt, days, supg, lam, geometry, s.get("diag_every"),
                    snaps, outer=s.get("outer", 2), inner=s.get("inner", 2))
        stem = _stem(case, scheme, supg, n)
        meta = dict(r.metadata, git_revision=rev)
        write_csv(os.path.join(out, stem + "_series.csv"), ["t", "energy", "enstrophy", "mass"],
                  [[d.t, d.energy, d.enstrophy, d.mass] for d in r.series], meta)
        e0, e1 = r.series[0], r.series[-1]
        write_csv(os.path.join(out, stem + ".csv"),
                  ["case", "scheme", "n", "dt", "steps", "u_error", "h_error",
                   "energy_change", "enstrophy_change", "mass_change"],
                  [[case, scheme, n, dt, r.steps, r.u_error, r.h_error,
                    (e1.energy - e0.energy) / e0.energy, (e1.enstrophy - e0.enstrophy) / e0.enstrophy,
                    (e1.mass - e0.mass) / e0.mass]], meta)
        write_timing(os.path.join(out, stem + ".timing.txt"), r.runtime)
        for d, st in sorted(r.snapshots.items()):
            write_fields_vtk(os.path.join(out, f"{stem}_day{d:g}.vtk"),
                             [st.u, st.h, r.model.absolute_vorticity(st)], title=f"{stem} day {d:g}")
        print(f"{case} {scheme} n={n} dt={dt:g} steps={r.steps} u_error={r.u_error:.6e} "
              f"h_error={r.h_error:.6e} energy_change={(e1.energy - e0.energy) / e0.energy:.3e} "
              f"({r.runtime:.1f} s)")
        rows.append((n, r.u_error, r.h_error))
    if len(rows) >= 3 and case == "williamson2":
        su = fit_convergence_slope([(1.0 / n, eu) for n, eu, _ in rows])
        sh = fit_convergence_slope([(1.0 / n, eh) for n, _, eh in rows])
        write_csv(os.path.join(out, f"{case}_{scheme}_convergence.csv"), ["n", "u_error", "h_error"], rows,
                  {"case": case, "scheme": scheme, "dt": dt, "days": days, "slope_u": su, "slope_h": sh,
                   "git_revision": rev})
        print(f"{case} {scheme} fitted slopes u={su:.3f} h={sh:.3f}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(transport_main())
