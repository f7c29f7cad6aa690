"""Command-line pipeline: codebook, leeway, paths, metrics, did, counterfactual.

Every run is deterministic given its seed and thread count; output files
begin with a comment line carrying the package version, the seed, and a
hash of the run configuration. CSV inputs follow the canonical schemas of
the owning modules.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import __version__, codebook as cb, counterfactual as cf
from . import inference, metrics, solver
from .codebook import CodebookError
from .errors import DomainError, NotApplicable
from .inference import ConvergenceError, DidRow, PosteriorDraws
from .nature import PriorSpec
from .solver import OptimizationGrid


def _config_hash(args: argparse.Namespace) -> str:
    # Thread count and output destinations never change results, so they
    # stay out of the hash to keep reruns byte-identical.
    skip = {"output", "per_state", "doses_csv", "line_samples", "output_draws",
            "output_diagnostics", "emit_diagnostics", "func", "threads"}
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.md5(blob.encode()).hexdigest()[:12]


def _header_comment(args, seed) -> str:
    return f"# leeway v{__version__} seed={seed} config={_config_hash(args)}\n"


def _write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _fmt(x: float) -> str:
    return repr(float(x))


def _load_prior(path: str | None) -> PriorSpec:
    if path is None:
        return PriorSpec.default()
    with open(path, encoding="utf-8") as fh:
        return PriorSpec.from_json(fh.read())


def _grid(args) -> OptimizationGrid:
    return OptimizationGrid(step=args.grid_step)


def _threads(args) -> int:
    return args.threads if args.threads else (os.cpu_count() or 1)


# -- codebook ----------------------------------------------------------------

def _cmd_codebook(args) -> int:
    if args.validate:
        with open(args.input, "rb") as fh:
            issues = cb.lint_codebook(fh)
        if issues:
            for (state, cycle), message in issues:
                print(f"{state},{cycle}: {message}", file=sys.stderr)
            return 1
        print(f"{args.input}: ok")
        return 0
    with open(args.input, "rb") as fh:
        book = cb.parse_codebook(fh)
    print(f"parsed {len(book)} rows")
    if args.output:
        _write_text(args.output, _header_comment(args, "-") + cb.serialize_codebook(book))
    return 0


# -- leeway ------------------------------------------------------------------

def _cmd_leeway(args) -> int:
    with open(args.codebook, "rb") as fh:
        book = cb.parse_codebook(fh)
    prior = _load_prior(args.priors)
    grid = _grid(args)
    rows = solver.leeway_table(book, prior, n_draws=args.draws, seed=args.seed,
                               grid=grid, threads=_threads(args))
    if args.format == "json":
        payload = {
            "meta": {"version": __version__, "seed": args.seed,
                     "config": _config_hash(args)},
            "rows": [{"state": p.state_id, "cycle": p.cycle,
                      "realized_leeway": s.realized, "maximum_leeway": s.maximum,
                      "n_draws": s.n_draws, "seed": args.seed}
                     for p, s in rows],
        }
        _write_text(args.output, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    else:
        out = io.StringIO()
        out.write(_header_comment(args, args.seed))
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["state", "cycle", "realized_leeway", "maximum_leeway",
                         "n_draws", "seed"])
        for process, scores in rows:
            writer.writerow([process.state_id, process.cycle, _fmt(scores.realized),
                             _fmt(scores.maximum), scores.n_draws, args.seed])
        _write_text(args.output, out.getvalue())

    if args.emit_diagnostics:
        from .nature import sample_parameters
        from .solver import ControlAssignment
        records = []
        for process, _ in rows:
            assignment = ControlAssignment.realized(process)
            for i in range(args.draws):
                theta = sample_parameters(prior, args.seed, i)
                res = solver.solve(process, assignment, theta, grid)
                records.append({
                    "state": process.state_id, "cycle": process.cycle, "draw": i,
                    "value": res.value, "path_probs": res.path_probs,
                    "round2_proposal": res.round2_proposal,
                    "veto_thresholds": res.veto_thresholds,
                })
        payload = {"meta": {"version": __version__, "seed": args.seed,
                            "config": _config_hash(args)},
                   "draws": records}
        _write_text(args.emit_diagnostics, json.dumps(payload, sort_keys=True) + "\n")
    return 0


# -- paths -------------------------------------------------------------------

def _cmd_paths(args) -> int:
    with open(args.codebook, "rb") as fh:
        book = cb.parse_codebook(fh)
    prior = _load_prior(args.priors)
    table = solver.path_table(book, prior, n_draws=args.draws, seed=args.seed,
                              grid=_grid(args), threads=_threads(args))
    cross = table.cross_tab()
    buckets = ("legislature", "commission", "court")

    out = io.StringIO()
    out.write(_header_comment(args, args.seed))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["final_drawer", *buckets, "total"])
    for row_bucket in buckets:
        cells = [cross[row_bucket][c] for c in buckets]
        writer.writerow([row_bucket, *(_fmt(c) for c in cells), _fmt(sum(cells))])
    totals = [sum(cross[r][c] for r in buckets) for c in buckets]
    writer.writerow(["total", *(_fmt(t) for t in totals), _fmt(sum(totals))])
    _write_text(args.output, out.getvalue())

    if args.per_state:
        out = io.StringIO()
        out.write(_header_comment(args, args.seed))
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["state", "cycle", "p_legislature", "p_commission",
                         "p_court", "modal", "actual"])
        for (state, cycle), probs in table.state_probs.items():
            writer.writerow([state, cycle, *(_fmt(probs[b]) for b in buckets),
                             table.modal((state, cycle)), table.actual[(state, cycle)]])
        _write_text(args.per_state, out.getvalue())
    return 0


# -- metrics -----------------------------------------------------------------

def _read_plans(path: str) -> list[tuple[tuple[str, int], metrics.PlanProfile]]:
    groups: dict[tuple[str, int], list[tuple[float, float | None]]] = {}
    order: list[tuple[str, int]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(io.StringIO("".join(lines)))
    expected = {"state", "cycle", "district", "rep_share"}
    if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
        raise DomainError(f"plan file must have columns {sorted(expected)}")
    has_turnout = "turnout" in reader.fieldnames
    for record in reader:
        key = (record["state"], int(record["cycle"]))
        if key not in groups:
            groups[key] = []
            order.append(key)
        turnout = float(record["turnout"]) if has_turnout and record["turnout"] else None
        groups[key].append((float(record["rep_share"]), turnout))
    plans = []
    for key in order:
        shares = tuple(s for s, _ in groups[key])
        turnouts = tuple(t for _, t in groups[key])
        weights = turnouts if all(t is not None for t in turnouts) else None
        plans.append((key, metrics.PlanProfile(shares, weights)))
    return plans


def _read_ensemble(path: str) -> dict:
    table = {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for record in csv.DictReader(io.StringIO("".join(lines))):
        key = (record["state"], int(record["cycle"]), record["metric"])
        table[key] = metrics.EnsembleSummary(float(record["mean"]), float(record["sd"]))
    return table


def _cmd_metrics(args) -> int:
    if args.sigma_national and args.sigma_district:
        model = metrics.SwingModel(args.sigma_national, args.sigma_district)
    else:
        model = metrics.SwingModel.calibrated()
    plans = _read_plans(args.plans)
    ensemble = _read_ensemble(args.ensemble) if args.ensemble else {}

    out = io.StringIO()
    out.write(_header_comment(args, "-"))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["state", "cycle", "metric", "value"])
    for (state, cycle), plan in plans:
        baseline_vote = float(np.average(plan.shares, weights=plan.weights))
        values = {
            "expected_seats": metrics.expected_seats(plan, model),
            "responsiveness": metrics.responsiveness(plan, model),
            "competitive_share": metrics.competitive_share(plan, model),
            "efficiency_gap": metrics.efficiency_gap(plan),
            "partisan_bias": metrics.partisan_bias(plan, model, baseline_vote),
            "dilution_asymmetry": metrics.dilution_asymmetry(plan),
        }
        for name, value in values.items():
            writer.writerow([state, cycle, name, _fmt(value)])
            summary = ensemble.get((state, cycle, name))
            if summary is not None:
                adjusted = metrics.simulation_adjust(value, summary)
                writer.writerow([state, cycle, f"{name}_sim_diff", _fmt(adjusted.difference)])
                writer.writerow([state, cycle, f"{name}_abs_sim_diff",
                                 _fmt(adjusted.abs_difference)])
                if adjusted.z_score is not None:
                    writer.writerow([state, cycle, f"{name}_sim_z", _fmt(adjusted.z_score)])
                    writer.writerow([state, cycle, f"{name}_abs_sim_z", _fmt(adjusted.abs_z)])
    _write_text(args.output, out.getvalue())
    return 0


# -- did ---------------------------------------------------------------------

_DID_COLUMNS = ("state", "dY0", "dY1", "d0", "d1", "dem08", "south", "log_seats",
                "delta_seats", "log_corrupt", "initiative")


def read_did_rows(path: str) -> list[DidRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(io.StringIO("".join(lines)))
    if reader.fieldnames is None or tuple(reader.fieldnames) != _DID_COLUMNS:
        raise DomainError(f"did input must have columns {','.join(_DID_COLUMNS)}")
    rows = []
    for r in reader:
        rows.append(DidRow(
            state_id=r["state"], dy0=float(r["dY0"]), dy1=float(r["dY1"]),
            d0=float(r["d0"]), d1=float(r["d1"]), dem08=float(r["dem08"]),
            south=float(r["south"]), log_seats=float(r["log_seats"]),
            delta_seats=float(r["delta_seats"]), log_corrupt=float(r["log_corrupt"]),
            initiative=float(r["initiative"]),
        ))
    return rows


def save_draws_csv(draws: PosteriorDraws, path: str, header: str = ""):
    out = io.StringIO()
    if header:
        out.write(header)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["chain", "draw", *draws.column_names, "sigma"])
    chains, n, _ = draws.coefficients.shape
    for c in range(chains):
        for t in range(n):
            writer.writerow([c, t, *(_fmt(v) for v in draws.coefficients[c, t]),
                             _fmt(draws.sigma[c, t])])
    _write_text(path, out.getvalue())


def load_draws_csv(path: str) -> PosteriorDraws:
    """Rebuild PosteriorDraws from a saved draw file (diagnostics recomputed)."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(io.StringIO("".join(lines)))
    header = next(reader)
    expected = ["chain", "draw", *inference.COLUMN_NAMES, "sigma"]
    if header != expected:
        raise DomainError("draws file does not match the model's column layout")
    by_chain: dict[int, list[list[float]]] = {}
    for cells in reader:
        by_chain.setdefault(int(cells[0]), []).append([float(v) for v in cells[2:]])
    chain_ids = sorted(by_chain)
    data = np.array([by_chain[c] for c in chain_ids])
    coefficients = data[:, :, :-1]
    sigma = data[:, :, -1]
    rhat, ess = {}, {}
    for j, name in enumerate(inference.COLUMN_NAMES):
        rhat[name], ess[name] = inference._rhat_ess(coefficients[:, :, j])
    rhat["sigma"], ess["sigma"] = inference._rhat_ess(sigma)
    diagnostics = inference.Diagnostics(rhat=rhat, ess=ess,
                                        accept_coefficients=(), accept_sigma=())
    return PosteriorDraws(coefficients=coefficients, sigma=sigma,
                          column_names=inference.COLUMN_NAMES, diagnostics=diagnostics)


def _cmd_did(args) -> int:
    rows = read_did_rows(args.input)
    design = inference.build_design(rows)
    prior = inference.PriorConfig.from_design(design, sigma_y=args.sigma_y)
    draws = inference.fit_posterior(design, prior, n_draws=args.draws,
                                    n_chains=args.chains, seed=args.seed)
    save_draws_csv(draws, args.output_draws, _header_comment(args, args.seed))
    diag = draws.diagnostics
    payload = {
        "meta": {"version": __version__, "seed": args.seed,
                 "config": _config_hash(args), "outcome_label": args.outcome_label},
        "rhat": diag.rhat, "ess": diag.ess,
        "accept_coefficients": list(diag.accept_coefficients),
        "accept_sigma": list(diag.accept_sigma),
        "acr": None,
    }
    est = inference.acr(draws, rows)
    payload["acr"] = {"mean": est.effect.mean, "ci80": list(est.effect.ci80),
                      "ci95": list(est.effect.ci95),
                      "standardized_mean": est.standardized.mean}
    _write_text(args.output_diagnostics, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    print(f"fit ok: max rhat {max(diag.rhat.values()):.4f}, "
          f"min ess {min(diag.ess.values()):.0f}")
    return 0


# -- counterfactual ----------------------------------------------------------

def _read_covariates(path: str) -> dict:
    expected = ("state", "dem08", "south", "log_seats", "delta_seats",
                "log_corrupt", "initiative", "n_districts")
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(io.StringIO("".join(lines)))
    if reader.fieldnames is None or tuple(reader.fieldnames) != expected:
        raise DomainError(f"covariates file must have columns {','.join(expected)}")
    table = {}
    for r in reader:
        table[r["state"]] = cf.StateCovariates(
            dem08=float(r["dem08"]), south=float(r["south"]),
            log_seats=float(r["log_seats"]), delta_seats=float(r["delta_seats"]),
            log_corrupt=float(r["log_corrupt"]), initiative=float(r["initiative"]),
            n_districts=int(r["n_districts"]))
    return table


def _cmd_counterfactual(args) -> int:
    with open(args.codebook, "rb") as fh:
        book = cb.parse_codebook(fh)
    prior = _load_prior(args.priors)
    template = cf.TEMPLATES[args.template]()
    seat_model = load_draws_csv(args.seat_model)
    resp_model = load_draws_csv(args.resp_model)
    for label, model in (("seat", seat_model), ("responsiveness", resp_model)):
        if not model.diagnostics.passes():
            raise ConvergenceError(f"{label} model draws fail convergence thresholds",
                                   model.diagnostics)
    covariates = _read_covariates(args.covariates)
    with open(args.baseline, encoding="utf-8") as fh:
        raw = json.load(fh)
    baseline = cf.Baseline(dem_seats=float(raw["dem_seats"]),
                           slope_seats_per_pp=float(raw["slope_seats_per_pp"]))

    pairs = cf.counterfactual_doses(book, template, prior, n_draws=args.draws,
                                    seed=args.seed, grid=_grid(args))
    prediction = cf.predict_national(pairs, seat_model, resp_model, covariates, baseline)

    def summary(effect):
        return {"mean": effect.mean, "ci80": list(effect.ci80), "ci95": list(effect.ci95)}

    payload = {
        "meta": {"version": __version__, "seed": args.seed,
                 "config": _config_hash(args), "template": args.template},
        "total_dem_seat_change": summary(prediction.total_dem_seat_change),
        "responsiveness_slope": summary(prediction.responsiveness_slope),
        "seats_votes_line": {"intercept_seats": prediction.seats_votes_line[0],
                             "slope_seats_per_pp": prediction.seats_votes_line[1]},
    }
    _write_text(args.output, json.dumps(payload, sort_keys=True, indent=2) + "\n")

    if args.doses_csv:
        out = io.StringIO()
        out.write(_header_comment(args, args.seed))
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["state", "d_current", "d_reformed", "seat_effect_mean"])
        for pair in pairs:
            effect = prediction.state_seat_effects[pair.state_id]
            writer.writerow([pair.state_id, _fmt(pair.d_current),
                             _fmt(pair.d_reformed), _fmt(effect.mean)])
        _write_text(args.doses_csv, out.getvalue())

    if args.line_samples:
        out = io.StringIO()
        out.write(_header_comment(args, args.seed))
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["draw", "intercept_seats", "slope_seats_per_pp"])
        intercepts = baseline.dem_seats + prediction.seat_change_draws
        for i, (icpt, slope) in enumerate(zip(intercepts, prediction.slope_draws)):
            writer.writerow([i, _fmt(icpt), _fmt(slope)])
        _write_text(args.line_samples, out.getvalue())
    return 0


# -- parser ------------------------------------------------------------------

def _add_common_solver_args(p):
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--priors", help="JSON file of prior overrides")
    p.add_argument("--threads", type=int, default=0,
                   help="worker threads (default: all cores); results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leeway",
        description="Redistricting-process game solver and reform analysis pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codebook", help="parse or validate a codebook CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--validate", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_codebook)

    p = sub.add_parser("leeway", help="solve the game and write leeway scores")
    p.add_argument("--codebook", required=True)
    _add_common_solver_args(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--emit-diagnostics", help="write per state-draw solver JSON here")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_leeway)

    p = sub.add_parser("paths", help="final-drawer path cross-tab")
    p.add_argument("--codebook", required=True)
    _add_common_solver_args(p)
    p.add_argument("--per-state", help="also write per-state path probabilities")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_paths)

    p = sub.add_parser("metrics", help="plan outcome metrics under the swing model")
    p.add_argument("--plans", required=True)
    p.add_argument("--ensemble", help="simulation ensemble summaries for adjustment")
    p.add_argument("--sigma-national", type=float, default=0.0)
    p.add_argument("--sigma-district", type=float, default=0.0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("did", help="fit the dose-response outcome model")
    p.add_argument("--input", required=True)
    p.add_argument("--draws", type=int, default=10000)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-y", type=float, default=None,
                   help="override the response sd used for prior scales")
    p.add_argument("--outcome-label", default="outcome")
    p.add_argument("--output-draws", required=True)
    p.add_argument("--output-diagnostics", required=True)
    p.set_defaults(func=_cmd_did)

    p = sub.add_parser("counterfactual", help="nationwide reform prediction")
    p.add_argument("--template", choices=sorted(cf.TEMPLATES), required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--seat-model", required=True)
    p.add_argument("--resp-model", required=True)
    p.add_argument("--covariates", required=True)
    p.add_argument("--baseline", required=True)
    _add_common_solver_args(p)
    p.add_argument("--output", required=True)
    p.add_argument("--doses-csv")
    p.add_argument("--line-samples")
    p.set_defaults(func=_cmd_counterfactual)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CodebookError, DomainError, NotApplicable, cf.TemplateError,
            ConvergenceError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
