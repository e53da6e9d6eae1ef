"""Command-line front end.

Usage: ``deblog SUBCOMMAND --spec FILE [--out DIR] [options]``.

A spec file is JSON. Form tables map basis names (``dtheta1`` or
``dtheta2^dtheta3``) to coefficients; a coefficient is a number or a list of
terms ``{"coef": c, "cos": [f1, ..., f_N]}`` / ``{"coef": c, "sin": [...]}``
with one integer frequency per angle (``[]`` or all zeros for a constant).

Exit codes: 0 when every check passes, 1 when a check fails, 2 on input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from .desing import (
    check_coincidence,
    check_folded,
    check_symplectic,
    convergence_report,
    fold_locus,
    loglog_slope,
    symmetric_scan,
)
from .errors import DeblogError, SpecError
from .forms import Form, TrigPoly
from .model import LaurentModel, validate_model
from .moment import coincidence_values, moment_image_case1, moment_image_case2
from .profile import CORRECTED, EVEN, LITERAL_TAIL, build_profile, eval_profile, validate_profile
from .report import CheckReport, Measurement, combine
from .volume import fit_expansion, predicted_expansion, volume_table

SUBCOMMANDS = ("profile", "validate", "check-symplectic", "check-folded", "coincide",
               "converge", "volume", "fit", "fold-locus", "moment-image")
DEFAULT_LADDER = (0.2, 0.1, 0.05, 0.025)
FIT_LADDER = (0.2, 0.1, 0.05, 0.02, 0.01)


# ---------------------------------------------------------------------------
# Spec parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    x_points: int = 401
    theta_points: int = 16
    eps_ladder: tuple[float, ...] = DEFAULT_LADDER
    lambda_: float = 0.5
    offset: float = 0.0
    leaf_moment: TrigPoly | None = None
    J: int | None = None
    tail_mode: str = CORRECTED


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _err(text: str, path: str, msg: str) -> SpecError:
    key = path.split(".")[0].split("[")[0]
    line = _line_of(text, key)
    where = f"line {line}, " if line else ""
    return SpecError(f"{where}field '{path}': {msg}")


def _parse_coeff(value, nangles: int, text: str, path: str):
    if isinstance(value, bool):
        raise _err(text, path, "coefficient must be a number or a list of terms")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, list):
        raise _err(text, path, "coefficient must be a number or a list of terms")
    out = TrigPoly.constant(0.0, nangles)
    for i, term in enumerate(value):
        tpath = f"{path}[{i}]"
        if not isinstance(term, dict) or "coef" not in term:
            raise _err(text, tpath, "term must be an object with 'coef'")
        kinds = [k for k in ("cos", "sin") if k in term]
        extra = set(term) - {"coef", "cos", "sin"}
        if len(kinds) > 1 or extra:
            raise _err(text, tpath, "term takes 'coef' and at most one of 'cos'/'sin'")
        kind = kinds[0] if kinds else "cos"
        freqs = term.get(kind, [])
        if not freqs:
            freqs = [0] * nangles
        if len(freqs) != nangles or not all(isinstance(f, int) for f in freqs):
            raise _err(text, tpath, f"frequency list must hold {nangles} integers")
        out = out + TrigPoly.monomial(float(term["coef"]), nangles, 0, tuple(freqs), kind[0])
    return out


_BASIS = re.compile(r"^dtheta(\d+)$")


def _parse_form(table, dim: int, degree: int, text: str, path: str) -> Form:
    if not isinstance(table, dict):
        raise _err(text, path, f"expected a {degree}-form table")
    out = Form.zero(dim, degree)
    for name, coeff in table.items():
        parts = [p.strip() for p in name.split("^")]
        if len(parts) != degree:
            raise _err(text, f"{path}.{name}", f"expected a wedge of {degree} basis 1-forms")
        idx = []
        for p in parts:
            m = _BASIS.match(p)
            if not m:
                raise _err(text, f"{path}.{name}", f"unknown basis form '{p}' (forms on Z use dtheta1..dtheta{dim - 1})")
            i = int(m.group(1))
            if not 1 <= i <= dim - 1:
                raise _err(text, f"{path}.{name}", f"dimension mismatch: dtheta{i} does not exist for n={dim // 2}")
            idx.append(i)
        if len(set(idx)) != len(idx):
            raise _err(text, f"{path}.{name}", "repeated basis form")
        c = _parse_coeff(coeff, dim - 1, text, f"{path}.{name}")
        if isinstance(c, float):
            c = TrigPoly.constant(c, dim - 1)
        out = out + Form.basis(dim, *idx, coeff=c)
    return out


def _positive_int(data, key, default, text):
    v = data.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise _err(text, key, "must be a positive integer")
    return v


def parse_eps_ladder(values, text: str = "", path: str = "eps_ladder") -> tuple[float, ...]:
    if not isinstance(values, (list, tuple)) or not values:
        raise _err(text, path, "must be a nonempty list")
    try:
        ladder = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise _err(text, path, "entries must be numbers") from None
    if any(not 0.0 < e < 0.5 for e in ladder):
        raise _err(text, path, "entries must lie in (0, 1/2)")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise _err(text, path, "must be strictly decreasing")
    return ladder


def parse_model_spec(text: str):
    """Parse a JSON spec into (LaurentModel, Profile, RunConfig)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno}, column {exc.colno}: syntax error: {exc.msg}") from None
    if not isinstance(data, dict):
        raise SpecError("line 1: spec must be a JSON object")
    for key in ("m", "n", "alphas"):
        if key not in data:
            raise SpecError(f"missing required field '{key}'")
    m = _positive_int(data, "m", None, text)
    n = _positive_int(data, "n", None, text)
    dim = 2 * n
    alphas_raw = data["alphas"]
    if not isinstance(alphas_raw, list):
        raise _err(text, "alphas", "must be a list of 1-form tables")
    if len(alphas_raw) > m:
        raise _err(text, "alphas", f"expected m={m} Laurent coefficients alpha_i, got {len(alphas_raw)}")
    alphas = [_parse_form(a, dim, 1, text, f"alphas[{i}]") for i, a in enumerate(alphas_raw)]
    alphas += [Form.zero(dim, 1)] * (m - len(alphas))

    betas = [Form.zero(dim, 2)] * m
    beta_raw = data.get("beta", [])
    if not isinstance(beta_raw, list):
        raise _err(text, "beta", "must be a list of [j, 2-form table] pairs")
    for i, entry in enumerate(beta_raw):
        if not (isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], int)):
            raise _err(text, f"beta[{i}]", "entry must be [j, 2-form table]")
        j = entry[0]
        if not 0 <= j < m:
            raise _err(text, f"beta[{i}]", f"index j={j} outside 0..{m - 1}")
        betas[j] = betas[j] + _parse_form(entry[1], dim, 2, text, f"beta[{i}]")
    gamma = _parse_form(data.get("gamma", {}), dim, 1, text, "gamma")
    try:
        model = LaurentModel(m, n, tuple(alphas), tuple(betas), gamma, label=str(data.get("label", "spec")))
    except ValueError as exc:
        raise SpecError(str(exc)) from None

    prof = data.get("profile", {})
    if not isinstance(prof, dict):
        raise _err(text, "profile", "must be an object")
    J = prof.get("J")
    if J is not None and (not isinstance(J, int) or J < 0):
        raise _err(text, "profile", "J must be a nonnegative integer")
    tail_mode = prof.get("tail_mode", CORRECTED)
    if tail_mode not in (CORRECTED, LITERAL_TAIL):
        raise _err(text, "profile", f"unknown tail_mode {tail_mode!r}")
    if "k" in prof:
        k_expected = m // 2
        if prof["k"] != k_expected:
            raise _err(text, "profile", f"k={prof['k']} inconsistent with m={m} (k={k_expected})")

    grids = data.get("grids", {})
    if not isinstance(grids, dict):
        raise _err(text, "grids", "must be an object")
    x_points = _positive_int(grids, "x_points", 401, text)
    theta_points = _positive_int(grids, "theta_points", 16, text)
    ladder = parse_eps_ladder(data.get("eps_ladder", list(DEFAULT_LADDER)), text)
    lam = data.get("lambda", 0.5)
    if not isinstance(lam, (int, float)) or not 0.0 < lam <= 1.0:
        raise _err(text, "lambda", "must lie in (0, 1]")
    leaf = data.get("leaf_moment")
    leaf_field = None
    if leaf is not None:
        c = _parse_coeff(leaf, dim - 1, text, "leaf_moment")
        leaf_field = TrigPoly.constant(c, dim - 1) if isinstance(c, float) else c
    offset = data.get("offset", 0.0)
    if not isinstance(offset, (int, float)):
        raise _err(text, "offset", "must be a number")
    config = RunConfig(x_points, theta_points, ladder, float(lam), float(offset), leaf_field, J, tail_mode)
    profile = build_profile(m, J, tail_mode)
    return model, profile, config


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: str, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    return path


@dataclass
class RunResult:
    exit_code: int
    paths: list[str] = field(default_factory=list)
    report: str = ""


@dataclass
class _Ctx:
    model: LaurentModel
    profile: object
    config: RunConfig
    args: argparse.Namespace
    out: str
    paths: list[str] = field(default_factory=list)

    def csv(self, name, header, rows):
        self.paths.append(write_csv(os.path.join(self.out, name), header, rows))

    def tol(self, default: float) -> float:
        return self.args.tol if self.args.tol is not None else default


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_profile(c: _Ctx) -> list[CheckReport]:
    p = c.profile
    t = np.linspace(-3 * p.support, 3 * p.support, 601)
    rows = zip(t, *(np.asarray(eval_profile(p, t, r)) for r in range(3)))
    c.csv("profile.csv", ["t", "f", "fprime", "fsecond"], rows)
    return [validate_profile(p, c.tol(1e-9))]


def _cmd_validate(c: _Ctx) -> list[CheckReport]:
    return [validate_model(c.model, c.config.theta_points), validate_profile(c.profile)]


def _cmd_check_symplectic(c: _Ctx) -> list[CheckReport]:
    reports, rows = [], []
    for e in c.config.eps_ladder:
        r = check_symplectic(c.model, c.profile, e, c.config.x_points, c.config.theta_points)
        reports.append(r)
        rows.append((e, r.get("min |top(omega_eps^n)| on grid"),
                     r.get("min |top(omega_eps^n)| for |x| <= eps"), r.get("relative closedness residual")))
    c.csv("symplectic.csv", ["eps", "min_top", "band_min_top", "closedness"], rows)
    if len(rows) > 1:
        k = c.profile.k
        slope = loglog_slope([r[0] for r in rows], [r[2] for r in rows])
        reports.append(CheckReport("band-minimum growth", (
            Measurement("log-log slope", slope),
            Measurement("relative slope error vs -2k", abs(slope + 2 * k) / (2 * k), c.tol(0.1), "<="),
        ), c.tol(0.1)))
    return reports


def _cmd_coincide(c: _Ctx) -> list[CheckReport]:
    reports = [check_coincidence(c.model, c.profile, e, theta_points=c.config.theta_points,
                                 tol=c.tol(1e-11)) for e in c.config.eps_ladder]
    c.csv("coincide.csv", ["eps", "max_deviation"],
          [(e, r.get("max |omega_eps - omega|")) for e, r in zip(c.config.eps_ladder, reports)])
    return reports


def _cmd_converge(c: _Ctx) -> list[CheckReport]:
    table = convergence_report(c.profile, c.config.eps_ladder, c.args.jmax)
    c.csv("converge.csv", ["eps", "j", "sup_norm"], table.rows)
    k = c.profile.k
    ms = []
    for j, s in table.slopes.items():
        ms.append(Measurement(f"slope j={j}", s, 0.9 * (2 * k - j), ">="))
    ms.append(Measurement("max relative deviation outside [-eps, eps]",
                          max(table.outside_deviation.values()), c.tol(1e-12), "<="))
    return [CheckReport(f"convergence k={k}", tuple(ms), c.tol(1e-12))]


def _volume_samples(c: _Ctx, ladder):
    return volume_table(c.model, c.profile, ladder, c.config.offset)


def _comparison(c: _Ctx, fitted, predicted) -> CheckReport:
    ms = []
    for i, (f, p) in enumerate(zip(fitted.coefficients, predicted.coefficients)):
        ms.append(Measurement(f"d_{i} fitted", f))
        ms.append(Measurement(f"d_{i} predicted", p))
        if p != 0.0:
            ms.append(Measurement(f"d_{i} relative difference", abs(f - p) / abs(p), c.tol(5e-3), "<"))
    lead = fitted.leading
    stated = predicted.extras["stated_leading"]
    oracle = predicted.extras["oracle_leading"]
    ms.append(Measurement("leading constant 2(2+1/(2k-1)) formula", stated))
    ms.append(Measurement("leading constant (endpoint oracle)", oracle))
    if stated:
        ms.append(Measurement("fitted vs 2(2+1/(2k-1)) formula, relative", abs(lead - stated) / abs(stated)))
    if oracle:
        ms.append(Measurement("fitted vs endpoint oracle, relative", abs(lead - oracle) / abs(oracle)))
    return CheckReport("volume expansion: fitted vs predicted", tuple(ms), c.tol(5e-3))


def _cmd_volume(c: _Ctx) -> list[CheckReport]:
    rows = _volume_samples(c, c.config.eps_ladder)
    c.csv("volume.csv", ["eps", "volume_complement", "volume_inside", "volume_total", "predicted_total"], rows)
    reports = []
    pred = predicted_expansion(c.model, c.profile, c.config.offset)
    if len(rows) >= c.profile.k + 2:
        fitted = fit_expansion([(r[0], r[3]) for r in rows], c.profile.k)
        reports.append(_comparison(c, fitted, pred))
    dev = max(abs(r[3] - r[4]) / abs(r[4]) for r in rows)
    reports.append(CheckReport("volume vs closed form", (
        Measurement("max relative deviation", dev, c.tol(1e-9), "<="),), c.tol(1e-9)))
    return reports


def _cmd_fit(c: _Ctx) -> list[CheckReport]:
    ladder = c.config.eps_ladder if c.args.eps else FIT_LADDER
    rows = _volume_samples(c, ladder)
    samples = [(r[0], r[3]) for r in rows]
    k = c.profile.k
    fitted = fit_expansion(samples, k)
    aug = fit_expansion(samples, k, augmented=True)
    pred = predicted_expansion(c.model, c.profile, c.config.offset)
    c.csv("fit.csv", ["coefficient", "fitted", "predicted"],
          [(f"d_{i}", f, p) for i, (f, p) in enumerate(zip(fitted.coefficients, pred.coefficients))])
    even = max((abs(v) for v in aug.extras["even_powers"]), default=0.0)
    parity = CheckReport("even-power coefficients", (
        Measurement("max |even-power coefficient| / |d_k|", even / abs(fitted.leading), 1e-3, "<"),
        Measurement("fit residual", fitted.residual),), 1e-3)
    return [_comparison(c, fitted, pred), parity]


def _fold_rows(c: _Ctx):
    rows, reports = [], []
    s = c.profile.support
    for e in c.config.eps_ladder:
        xs = symmetric_scan(s * e * 0.999, c.config.x_points)
        roots = fold_locus(c.model, c.profile, e, xs)
        for r in roots:
            rows.append((e, *r.thetas, r.x, r.transversal, r.dtop))
        ms = [Measurement("roots found", float(len(roots)), 0.0, ">"),
              Measurement("non-transversal roots", float(sum(not r.transversal for r in roots)), 0.5, "<")]
        reports.append(CheckReport(f"fold locus eps={e:g}", tuple(ms), 0.0,
                                   notes=tuple(f"x = {r.x:.12g} ({'transversal' if r.transversal else 'degenerate'})"
                                               for r in roots)))
    header = ["eps"] + [f"theta{i}" for i in range(1, c.model.nangles + 1)] + ["x", "transversal", "dtop"]
    return header, rows, reports


def _cmd_check_folded(c: _Ctx) -> list[CheckReport]:
    reports = [check_folded(c.model, c.profile, e, c.config.theta_points) for e in c.config.eps_ladder]
    header, rows, fold_reports = _fold_rows(c)
    c.csv("folded.csv", header, rows)
    return reports + fold_reports


def _cmd_fold_locus(c: _Ctx) -> list[CheckReport]:
    header, rows, reports = _fold_rows(c)
    c.csv("fold_locus.csv", header, rows)
    return reports


def _cmd_moment_image(c: _Ctx) -> list[CheckReport]:
    rows, reports = [], []
    lam = c.config.lambda_
    if c.profile.parity == EVEN:
        ladder = [e for e in c.config.eps_ladder if e <= lam]
        images = [moment_image_case2(c.profile, e, lam) for e in ladder]
        rows += [im.csv_row() for im in images]
        k = c.profile.k
        if images:
            ratios = [im.upper * e ** (2 * k - 1) / 2.0 for e, im in zip(ladder, images)]
            x = np.linspace(lam, 0.99, 50)
            spread = max(float(np.max(np.abs(coincidence_values(c.profile, e, lam, x)
                                             - coincidence_values(c.profile, ladder[0], lam, x))))
                         for e in ladder)
            reports.append(CheckReport("case-2 image", (
                Measurement("upper * eps^(2k-1) / 2 at smallest eps", ratios[-1]),
                Measurement("|ratio - 1| at smallest eps", abs(ratios[-1] - 1.0), c.tol(0.05), "<="),
                Measurement("eps-dependence of f_eps(x) - f_eps(lambda), |x| >= lambda", spread, 1e-12, "<="),
            ), c.tol(0.05)))
    if c.config.leaf_moment is not None:
        im = moment_image_case1(c.model, c.config.leaf_moment)
        rows += [(e, im.lower, im.upper, im.case_tag) for e in c.config.eps_ladder]
    c.csv("moment_image.csv", ["eps", "lower", "upper", "case_tag"], rows)
    return reports


_DISPATCH = {
    "profile": _cmd_profile,
    "validate": _cmd_validate,
    "check-symplectic": _cmd_check_symplectic,
    "check-folded": _cmd_check_folded,
    "coincide": _cmd_coincide,
    "converge": _cmd_converge,
    "volume": _cmd_volume,
    "fit": _cmd_fit,
    "fold-locus": _cmd_fold_locus,
    "moment-image": _cmd_moment_image,
}


def _grid(text: str) -> tuple[int, int]:
    try:
        nx, nt = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected NX,NTHETA") from None
    if nx < 3 or nt < 1:
        raise argparse.ArgumentTypeError("grid sizes too small")
    return nx, nt


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deblog", description="Desingularize b^m-symplectic forms and check the result.")
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--spec", required=True, help="JSON model spec")
    ap.add_argument("--out", default=".", help="output directory for CSV and report files")
    ap.add_argument("--eps", help="comma-separated eps ladder (overrides the spec)")
    ap.add_argument("--grid", type=_grid, help="NX,NTHETA grid sizes")
    ap.add_argument("--jmax", type=int, help="highest derivative order for 'converge'")
    ap.add_argument("--tail-mode", choices=(CORRECTED, LITERAL_TAIL), help="odd-case tail formula")
    ap.add_argument("--tol", type=float, help="override the main tolerance of the check")
    return ap


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def run_command(argv) -> RunResult:
    parser = build_parser()
    parser.__class__ = _Parser
    try:
        args = parser.parse_args(list(argv))
    except _ArgError as exc:
        print(f"deblog: error: {exc}", file=sys.stderr)
        return RunResult(2)
    try:
        with open(args.spec) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"deblog: cannot read spec: {exc}", file=sys.stderr)
        return RunResult(2)
    try:
        model, profile, config = parse_model_spec(text)
        changes = {}
        if args.eps:
            changes["eps_ladder"] = parse_eps_ladder(args.eps.split(","), "", "--eps")
        if args.grid:
            changes["x_points"], changes["theta_points"] = args.grid
        if args.tail_mode:
            changes["tail_mode"] = args.tail_mode
            profile = build_profile(model.m, config.J, args.tail_mode)
        if changes:
            config = RunConfig(**{**config.__dict__, **changes})
        os.makedirs(args.out, exist_ok=True)
        ctx = _Ctx(model, profile, config, args, args.out)
        reports = _DISPATCH[args.command](ctx)
    except (DeblogError, ValueError) as exc:
        print(f"deblog: error: {exc}", file=sys.stderr)
        return RunResult(2)
    summary = combine(f"{args.command} ({model.label})", reports)
    text_report = "\n".join(r.text() for r in reports) + \
        f"\n\n{'PASS' if summary.passed else 'FAIL'}: {args.command}\n"
    path = os.path.join(args.out, f"{args.command}-report.txt")
    with open(path, "w") as fh:
        fh.write(text_report)
    ctx.paths.append(path)
    print(text_report, end="")
    return RunResult(0 if summary.passed else 1, ctx.paths, text_report)


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv).exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
