"""Batch front end: ``gl2modp {invariants,weight-set,quotient,verify}``.

Parameters come from flags, optionally layered over a ``key = value`` config
file.  Exit status: 0 when every claim checks out, 1 when one fails, 2 for a
rejected configuration.  Output carries no timestamps, so identical inputs
give identical bytes.
"""
from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import click

from .gfq import is_prime
from .weights import SerreWeight

FORMATS = ("json", "csv", "text")
# largest q with the arithmetic tables the tree code runs on
TREE_Q_LIMIT = 512
VERIFY_SUITES = ("all", "principal-series", "highest-vector", "shifted-s", "t-weights", "f1-control", "schedule")
QUOTIENT_SUITES = ("ledger", "intermediates")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    p: Optional[int] = None
    f: Optional[int] = None
    e: Optional[int] = None
    r_vec: Optional[Tuple[int, ...]] = None
    w: int = 0
    radius: Optional[int] = None
    stages: Optional[int] = None
    suite: Optional[str] = None
    fmt: str = "json"
    out: Optional[str] = None
    seed: int = 0

    @property
    def weight(self) -> SerreWeight:
        return SerreWeight(self.p, self.r_vec, self.w)


# ---------------------------------------------------------------------------
# config assembly


_KEYS = {"p": "p", "f": "f", "e": "e", "r": "r_vec", "r_vec": "r_vec", "w": "w", "radius": "radius",
         "stages": "stages", "suite": "suite", "format": "fmt", "out": "out", "seed": "seed"}
_INT_FIELDS = ("p", "f", "e", "w", "radius", "stages", "seed")


def parse_r(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace("(", "").replace(")", "").replace(" ", "").split(",") if x)
    except ValueError:
        raise ConfigError(f"r must be a comma-separated list of integers, got {text!r}") from None


def read_config_file(path: str) -> Dict[str, object]:
    """``key = value`` lines; '#' starts a comment."""
    out: Dict[str, object] = {}
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        if sep not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, val = (s.strip() for s in line.split(sep, 1))
        if key not in _KEYS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[_KEYS[key]] = _coerce(_KEYS[key], val)
    return out


def _coerce(name: str, val):
    if val is None:
        return None
    if name == "r_vec":
        return parse_r(val) if isinstance(val, str) else tuple(val)
    if name in _INT_FIELDS:
        try:
            return int(val)
        except ValueError:
            raise ConfigError(f"{name} must be an integer, got {val!r}") from None
    return val


def build_config(command: str, config_file: Optional[str], **flags) -> RunConfig:
    """Config file values, then every flag that was given on the command line."""
    values = read_config_file(config_file) if config_file else {}
    for k, v in flags.items():
        if v is not None:
            values[k] = _coerce(k, v)
    cfg = RunConfig(command, **values)
    if cfg.fmt not in FORMATS:
        raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
    return cfg


# ---------------------------------------------------------------------------
# validation


def _require_explicit(cfg: RunConfig) -> None:
    missing = [name for name in ("p", "f", "e", "r_vec") if getattr(cfg, name) is None]
    if missing:
        names = ", ".join("r" if m == "r_vec" else m for m in missing)
        raise ConfigError(f"missing required parameter(s): {names} (no defaults are assumed)")


def _base_hypotheses(cfg: RunConfig) -> None:
    _require_explicit(cfg)
    if not is_prime(cfg.p):
        raise ConfigError(f"p must be prime, got {cfg.p}")
    if cfg.f < 1 or cfg.e < 1:
        raise ConfigError("the inertia degree f and ramification index e must be >= 1")
    if len(cfg.r_vec) != cfg.f:
        raise ConfigError(f"r has {len(cfg.r_vec)} digits but f = {cfg.f}")
    if any(not 0 <= rj <= cfg.p - 1 for rj in cfg.r_vec):
        raise ConfigError(f"Serre weight digits need 0 <= r_j <= p - 1, got r = {cfg.r_vec}")
    for name in ("radius", "stages"):
        val = getattr(cfg, name)
        if val is not None and val < 0:
            raise ConfigError(f"{name} must be >= 0")


def _generic_hypotheses(cfg: RunConfig) -> None:
    """The genericity used by the weight-set combinatorics and the staged quotient."""
    from .quotient import check_hypotheses

    try:
        check_hypotheses(cfg.weight, cfg.e)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def validate(cfg: RunConfig) -> RunConfig:
    _base_hypotheses(cfg)
    if cfg.command == "invariants":
        if cfg.radius is None:
            raise ConfigError("invariants needs an explicit --radius >= 1")
        if cfg.radius < 1:
            raise ConfigError("the enumeration radius must be >= 1")
        _tree_size(cfg)
    elif cfg.command == "weight-set":
        _generic_hypotheses(cfg)
    elif cfg.command == "quotient":
        _generic_hypotheses(cfg)
        if cfg.f < 2:
            raise ConfigError("the staged construction needs f >= 2 (for f = 1 the socle of ind/(T) already holds both weights)")
        suite = cfg.suite or "ledger"
        if suite not in QUOTIENT_SUITES:
            raise ConfigError(f"quotient suite must be one of {', '.join(QUOTIENT_SUITES)}")
        if suite == "intermediates" and cfg.e != 1:
            raise ConfigError("the off-target intermediate table is for the unramified case e = 1")
        cfg = replace(cfg, suite=suite, radius=1 if cfg.radius is None else cfg.radius)
        if suite == "ledger" and cfg.radius >= 1:
            _tree_size(cfg, "; --radius 0 gives the plan-level ledger")
    elif cfg.command == "verify":
        suite = cfg.suite or "all"
        if suite not in VERIFY_SUITES:
            raise ConfigError(f"verify suite must be one of {', '.join(VERIFY_SUITES)}")
        if suite != "all":
            reason = _suite_blocker(suite, cfg)
            if reason:
                raise ConfigError(f"suite {suite}: {reason}")
        cfg = replace(cfg, suite=suite)
    return cfg


def _tree_size(cfg: RunConfig, hint: str = "") -> None:
    if cfg.p ** cfg.f > TREE_Q_LIMIT:
        raise ConfigError(f"tree computations need q <= {TREE_Q_LIMIT}, got q = {cfg.p ** cfg.f}{hint}")


def _suite_blocker(suite: str, cfg: RunConfig) -> Optional[str]:
    """Why a verify suite does not apply to cfg, or None."""
    if suite != "schedule" and cfg.p ** cfg.f > TREE_Q_LIMIT:
        return f"needs q <= {TREE_Q_LIMIT}"
    if suite == "shifted-s":
        if cfg.f < 2:
            return "the shifted-s obstruction needs f > 1"
        if any(rj == 0 for rj in cfg.r_vec):
            return "the shifted-s obstruction needs every r_j > 0"
    if suite == "t-weights":
        if cfg.e < 2:
            return "the t elements need e > 1"
        if any(rj < 2 for rj in cfg.r_vec):
            return "the t elements need every r_j >= 2"
    if suite == "f1-control":
        if cfg.f != 1 or cfg.e < 2:
            return "the control run needs f = 1 and e > 1"
    return None


# ---------------------------------------------------------------------------
# emitters


def _cell(v) -> str:
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_cell(x) for x in v) + ")"
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    if v is None:
        return "-"
    return str(v)


def text_table(rows: List[dict]) -> str:
    if not rows:
        return "(empty)\n"
    cols = list(rows[0])
    cells = [[_cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(wd) for c, wd in zip(cols, widths)).rstrip()]
    lines.append("  ".join("-" * wd for wd in widths))
    lines += ["  ".join(x.ljust(wd) for x, wd in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def csv_table(rows: List[dict]) -> str:
    from .quotient import rows_to_csv

    return rows_to_csv([{k: _cell(v) for k, v in r.items()} for r in rows])


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _params_text(params: dict) -> str:
    return " ".join(f"{k}={_cell(v)}" for k, v in sorted(params.items()))


@dataclass
class Outcome:
    document: dict
    rows: List[dict]
    ok: bool
    title: str
    footer: List[str] = field(default_factory=list)


def render(outcome: Outcome, fmt: str) -> str:
    if fmt == "json":
        return dump_json(outcome.document)
    if fmt == "csv":
        return csv_table(outcome.rows)
    head = f"{outcome.title}: {'PASS' if outcome.ok else 'FAIL'}\n"
    params = outcome.document.get("parameters")
    if params:
        head += _params_text(params) + "\n"
    body = head + "\n" + text_table(outcome.rows)
    if outcome.footer:
        body += "\n" + "\n".join(outcome.footer) + "\n"
    return body


# ---------------------------------------------------------------------------
# commands


def cmd_invariants(cfg: RunConfig) -> Outcome:
    import warnings

    from .induction import TreeModel
    from .invariants import QuotientContext, enumerate_invariants, expected_basis, is_invariant

    weight = cfg.weight
    model = TreeModel(weight, e=cfg.e, radius=cfg.radius)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        space = enumerate_invariants(weight, cfg.e, cfg.radius, model=model)
    ctx = QuotientContext.spheres(model, cfg.radius)
    rows, basis = [], []
    all_inv = True
    for x, chi in zip(space.basis, space.characters):
        ok = bool(is_invariant(x, ctx))
        all_inv &= ok
        rows.append({"alpha": chi.alpha, "beta": chi.beta, "radius": x.radius(), "support": len(x.support()),
                     "invariant": ok})
        basis.append({"character": chi.as_dict(), "invariant": ok, "values": x.to_records()})
    order = sorted(range(len(rows)), key=lambda i: (rows[i]["alpha"], rows[i]["beta"], rows[i]["radius"]))
    rows = [rows[i] for i in order]
    basis = [basis[i] for i in order]
    expected = expected_basis(weight, cfg.e, cfg.radius)
    exp_chars: Dict[Tuple[int, int], int] = {}
    for _, c in expected:
        exp_chars[(c.alpha, c.beta)] = exp_chars.get((c.alpha, c.beta), 0) + 1
    exp_chars = dict(sorted(exp_chars.items()))
    checks = {
        "dimension matches the closed-form count": space.dimension == len(expected),
        "characters match the closed-form basis": space.character_multiset() == exp_chars,
        "every basis element is invariant": all_inv,
    }
    params = {"p": cfg.p, "f": cfg.f, "e": cfg.e, "r_vec": list(cfg.r_vec), "w": cfg.w, "radius": cfg.radius}
    doc = {
        "claim": "I(1)-invariants of ind modulo T",
        "parameters": params,
        "status": "pass" if all(checks.values()) else "fail",
        "dimension": space.dimension,
        "expected": [{"label": lab, "character": c.as_dict()} for lab, c in expected],
        "characters": [{"alpha": a, "beta": b, "count": n} for (a, b), n in space.character_multiset().items()],
        "basis": basis,
        "checks": checks,
        "warnings": space.warnings,
    }
    return Outcome(doc, rows, all(checks.values()), "invariants")


def cmd_weight_set(cfg: RunConfig) -> Outcome:
    from .quotient import ramified_weight_rows, weight_rows
    from .weights import weight_set

    weight = cfg.weight
    rows = ramified_weight_rows(weight, cfg.e) if cfg.e > 1 else weight_rows(weight_set(weight))
    distinct = len({(r["r"], r["w"]) for r in rows}) == len(rows)
    checks = {"weights are distinct": distinct}
    params = {"p": cfg.p, "f": cfg.f, "e": cfg.e, "r_vec": list(cfg.r_vec), "w": cfg.w}
    doc = {"claim": "weight set", "parameters": params, "status": "pass" if distinct else "fail",
           "weights": rows, "checks": checks}
    return Outcome(doc, rows, distinct, "weight set")


def _ledger_rows(entries: List[dict]) -> List[dict]:
    rows = []
    for d in entries:
        row = {}
        if "delta" in d:
            row["delta"] = d["delta"]
        chi = d["character"]
        row.update({
            "stage": d["stage"], "node": d["node"], "labels": " ".join(d["J_label"]) or "-",
            "letter": d["letter"], "param": d["predicted_param"], "tuple": d["digits"],
            "certified": d["certified_param"], "character": None if chi is None else [chi["alpha"], chi["beta"]],
            "dim": d["dimension"], "survived": d["survived"], "evidence": d["evidence"], "target": d["in_target"],
        })
        rows.append(row)
    return rows


def cmd_quotient(cfg: RunConfig) -> Outcome:
    from .quotient import run_f2_ramified, run_unramified, intermediate_rows

    weight = cfg.weight
    if cfg.suite == "intermediates":
        rows = intermediate_rows(weight)
        params = {"p": cfg.p, "f": cfg.f, "e": 1, "r_vec": list(cfg.r_vec), "w": cfg.w}
        doc = {"claim": "off-target intermediate weights", "parameters": params, "status": "pass", "rows": rows}
        return Outcome(doc, rows, True, "intermediates")
    if cfg.e == 1:
        rep = run_unramified(weight, cfg.stages, cfg.radius)
    else:
        rep = run_f2_ramified(weight, cfg.e, cfg.stages, cfg.radius)
    doc = rep.as_dict()
    return Outcome(doc, _ledger_rows(doc["entries"]), rep.passed, rep.claim)


def _verify_reports(cfg: RunConfig):
    from .invariants import (
        check_highest_vector_relations,
        check_principal_series,
        control_f1,
        generalized_t_suite,
        shifted_s_obstruction,
    )
    from .quotient import schedule_suite

    weight = cfg.weight
    wanted = VERIFY_SUITES[1:] if cfg.suite == "all" else (cfg.suite,)
    skipped = []
    for suite in wanted:
        reason = _suite_blocker(suite, cfg)
        if reason:
            skipped.append({"suite": suite, "reason": reason})
            continue
        if suite == "principal-series":
            yield suite, check_principal_series(weight)
        elif suite == "highest-vector":
            yield suite, check_highest_vector_relations(weight)
        elif suite == "shifted-s":
            for l in range(cfg.f):
                if weight.r + cfg.p ** l <= weight.q - 1:
                    yield suite, shifted_s_obstruction(weight, l, 1, e=cfg.e)
        elif suite == "t-weights":
            yield suite, generalized_t_suite(weight, (0,) * cfg.f, cfg.e)
            k_vec = tuple(1 if rj // 2 - 1 >= 1 else 0 for rj in cfg.r_vec)
            if any(k_vec):
                yield suite, generalized_t_suite(weight, k_vec, cfg.e)
        elif suite == "f1-control":
            yield suite, control_f1(weight, cfg.e)
        elif suite == "schedule":
            yield suite, schedule_suite(weight, samples=10, rng_seed=cfg.seed)
    yield None, skipped


def cmd_verify(cfg: RunConfig) -> Outcome:
    reports, rows, skipped, footer = [], [], [], []
    for suite, rep in _verify_reports(cfg):
        if suite is None:
            skipped = rep
            continue
        d = rep.as_dict()
        d["suite"] = suite
        reports.append(d)
        failed = [k for k, ok in rep.checks.items() if not ok]
        rows.append({"suite": suite, "claim": rep.claim, "status": "PASS" if rep.passed else "FAIL",
                     "parameters": _params_text(rep.parameters), "failed": "; ".join(failed) or "-"})
        if not rep.passed:
            footer += [f"witness [{suite}]: {json.dumps(wit, sort_keys=True)}" for wit in rep.witnesses]
    ok = all(r["status"] == "pass" for r in reports)
    params = {"p": cfg.p, "f": cfg.f, "e": cfg.e, "r_vec": list(cfg.r_vec), "w": cfg.w, "suite": cfg.suite,
              "seed": cfg.seed}
    doc = {"claim": "verification summary", "parameters": params, "status": "pass" if ok else "fail",
           "reports": reports, "skipped": skipped}
    footer += [f"skipped {s['suite']}: {s['reason']}" for s in skipped]
    return Outcome(doc, rows, ok, "verify", footer)


COMMANDS: Dict[str, Callable[[RunConfig], Outcome]] = {
    "invariants": cmd_invariants,
    "weight-set": cmd_weight_set,
    "quotient": cmd_quotient,
    "verify": cmd_verify,
}


def run(cfg: RunConfig) -> Tuple[int, str]:
    """Validate, execute, render.  Returns (exit status, output text)."""
    cfg = validate(cfg)
    outcome = COMMANDS[cfg.command](cfg)
    return (0 if outcome.ok else 1), render(outcome, cfg.fmt)


# ---------------------------------------------------------------------------
# click wiring


def _options(fn):
    opts = [
        click.option("--config", "config_file", type=click.Path(dir_okay=False), help="key = value parameter file"),
        click.option("--p", type=int, help="residue characteristic"),
        click.option("--f", type=int, help="inertia degree"),
        click.option("--e", type=int, help="ramification index"),
        click.option("--r", "r_vec", type=str, help="weight digits, e.g. 3,3"),
        click.option("--w", type=int, help="determinant twist"),
        click.option("--radius", type=int, help="tree radius budget"),
        click.option("--stages", type=int, help="number of quotient stages to run"),
        click.option("--suite", type=str, help="suite selector"),
        click.option("--format", "fmt", type=str, help="json, csv or text"),
        click.option("--out", type=click.Path(dir_okay=False), help="write here instead of stdout"),
        click.option("--seed", type=int, help="seed for randomized suites"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _dispatch(command: str, config_file, **flags) -> None:
    try:
        cfg = build_config(command, config_file, **flags)
        status, text = run(cfg)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    sys.exit(status)


@click.group()
def main() -> None:
    """Finite-radius computations for mod p representations of GL2."""


def _make(command: str, doc: str):
    @_options
    def handler(config_file, **flags):
        _dispatch(command, config_file, **flags)

    handler.__doc__ = doc
    main.command(command)(handler)


_make("invariants", "I(1)-invariants of ind/(T) on a ball, with their I-characters.")
_make("weight-set", "The labeled weight set of a seed weight.")
_make("quotient", "Staged quotient construction and its ledger.")
_make("verify", "Run the verification suites and summarize.")


def config_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)
