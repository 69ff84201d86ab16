"""Command line driver: class sets, eigenforms, lifts, Bessel checks and mod-ell search.

Every command prints one JSON document on stdout and logs to stderr.  Results
are cached under --cache-dir, keyed by a hash of the package version, the
command and the configuration fields the command depends on.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import random
import sys
import time
from dataclasses import asdict, dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

import click
import sympy

from . import __version__
from .bessel import (HypothesisError, _is_zero, RingClassGroup, bessel_identity_check, build_bessel_datum,
                     nonvanishing_witness, required_bound)
from .field import Element, FieldTower, PrimePlace
from .qalg import QuatContext, eichler_mass
from .qmforms import FormSpace, eigenforms
from .yoshida import (YoshidaLift, check_cuspidality, check_equivariance, reduce_mod_lambda,
                      table_integrality)

log = logging.getLogger("yoshidalift")


class ConfigError(click.ClickException):
    exit_code = 2


@dataclass
class JobConfig:
    n_minus: int = 2
    n_plus: int = 1
    weights: tuple = (8, 8)  # (2 k1 + 2, 2 k2 + 2)
    form1: dict = dc_field(default_factory=dict)  # selector: index, atkin_lehner, degree
    form2: dict = dc_field(default_factory=dict)
    K: int = -11
    C: int = 1
    phi: int = 0  # index into the primitive characters of Pic(O_C)
    ell: int | None = None
    bound: int = 6
    seed: int = 0

    @property
    def k(self) -> tuple[int, int]:
        return tuple((w - 2) // 2 for w in self.weights)

    def validate(self) -> "JobConfig":
        if len(self.weights) != 2 or any(w < 2 or w % 2 for w in self.weights):
            raise ConfigError("weights: need two even weights >= 2")
        k1, k2 = self.k
        if k1 < k2:
            raise ConfigError(f"k1 >= k2: got k = ({k1}, {k2}); list the larger weight first")
        if math.gcd(self.n_minus, self.n_plus) != 1:
            raise ConfigError("levels: N^- and N^+ must be coprime")
        if any(e > 1 for e in sympy.factorint(self.n_minus).values()) or \
                len(sympy.factorint(self.n_minus)) % 2 == 0:
            raise ConfigError("N^-: must be squarefree with an odd number of prime factors")
        if self.ell is not None:
            if self.ell <= 2 * k1:
                raise ConfigError(f"ell > 2 k1: ell = {self.ell} but 2 k1 = {2 * k1}")
            if (2 * self.n_minus * self.n_plus) % self.ell == 0:
                raise ConfigError(f"ell prime to 2N: ell = {self.ell} divides {2 * self.n_minus * self.n_plus}")
        return self

    def subtree(self, *names) -> dict:
        d = asdict(self)
        return {n: d[n] for n in names}


def load_config(path: str | None, overrides: dict) -> JobConfig:
    data = {}
    if path:
        data = json.loads(Path(path).read_text())
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = set(JobConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "weights" in data:
        data["weights"] = tuple(data["weights"])
    return JobConfig(**data).validate()


class Cache:
    """Content-addressed JSON store.  Corrupt entries are rebuilt with a warning."""

    def __init__(self, root: str | None):
        self.root = Path(root) if root else None

    def key(self, command: str, subtree: dict) -> str:
        blob = json.dumps({"version": __version__, "command": command, "config": subtree},
                          sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def fetch(self, command: str, subtree: dict, compute):
        if self.root is None:
            return compute(), False
        path = self.root / f"{command}-{self.key(command, subtree)[:24]}.json"
        if path.exists():
            try:
                return json.loads(path.read_text()), True
            except (json.JSONDecodeError, UnicodeDecodeError):
                log.warning("cache entry %s is corrupt; rebuilding", path.name)
        result = compute()
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(result, sort_keys=True))
        tmp.replace(path)
        return result, False


def _enc(x):
    if isinstance(x, Element):
        if not x.is_rational():
            return x.to_json()
        x = x.to_fraction()
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, (Fraction, int)):
        x = Fraction(x)
        return int(x) if x.denominator == 1 else str(x)
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    return _enc(obj)


def select_form(forms, selector: dict, which: str):
    """Pick one eigenform by index, Atkin-Lehner signs or coefficient field degree."""
    if "index" in selector:
        i = selector["index"]
        if not 0 <= i < len(forms):
            raise ConfigError(f"{which}: index {i} out of range ({len(forms)} forms)")
        return forms[i]
    al = {int(q): s for q, s in selector.get("atkin_lehner", {}).items()}
    deg = selector.get("degree")
    match = [f for f in forms
             if all(f.atkin_lehner.get(q) == s for q, s in al.items())
             and (deg is None or len(f.field_poly) - 1 == deg)]
    if not match:
        raise ConfigError(f"{which}: no eigenform matches {selector}")
    if len(match) > 1:
        raise ConfigError(f"{which}: selection ambiguous, {len(match)} eigen systems match {selector}: "
                          f"{[f.label for f in match]}")
    return match[0]


class Job:
    def __init__(self, cfg: JobConfig):
        self.cfg = cfg
        self.tower = FieldTower()
        self._ctx = None
        self._forms = {}

    @property
    def ctx(self) -> QuatContext:
        if self._ctx is None:
            self._ctx = QuatContext(self.cfg.n_minus, self.cfg.n_plus)
        return self._ctx

    def forms(self, k: int):
        if k not in self._forms:
            self._forms[k] = eigenforms(FormSpace(self.ctx, k, self.tower), seed=self.cfg.seed)
        return self._forms[k]

    def pair(self):
        k1, k2 = self.cfg.k
        f1 = select_form(self.forms(k1), self.cfg.form1, "form1")
        f2 = select_form(self.forms(k2), self.cfg.form2, "form2")
        return f1, f2

    def datum_and_character(self):
        try:
            datum = build_bessel_datum(self.cfg.K, self.cfg.C, self.ctx, self.tower)
        except HypothesisError as exc:
            raise ConfigError(str(exc)) from exc
        group = RingClassGroup(datum.K, datum.C)
        chars = [c for c in group.characters() if c.conductor_ok()]
        if not chars:
            raise ConfigError(f"no character of exact conductor {self.cfg.C}")
        if not 0 <= self.cfg.phi < len(chars):
            raise ConfigError(f"phi: index {self.cfg.phi} out of range ({len(chars)} characters)")
        return datum, group, chars[self.cfg.phi]


def run_classset(cfg: JobConfig) -> dict:
    ctx = QuatContext(cfg.n_minus, cfg.n_plus)
    classes = ctx.classes
    mass, expected = ctx.mass_check()
    return {"level": [cfg.n_minus, cfg.n_plus], "class_number": len(classes),
            "unit_orders": [len(c.units) for c in classes],
            "norms": [c.norm for c in classes],
            "ideals": [[list(row) for row in c.ideal.basis] for c in classes],
            "mass": mass, "mass_formula": expected, "mass_ok": mass == expected,
            "eichler_mass": eichler_mass(cfg.n_minus, cfg.n_plus)}


def run_eigenforms(cfg: JobConfig) -> dict:
    job = Job(cfg)
    out = {}
    for k in sorted(set(cfg.k)):
        out[str(k)] = [{"label": f.label, "atkin_lehner": f.atkin_lehner,
                        "field_poly": list(f.field_poly), "eisenstein": f.is_eisenstein(),
                        "a_p": {p: f.classical_ap(p) for p in sorted(f.hecke)}}
                       for f in job.forms(k)]
    return {"level": [cfg.n_minus, cfg.n_plus], "forms": out}


def run_lift(cfg: JobConfig) -> dict:
    job = Job(cfg)
    f1, f2 = job.pair()
    lift = YoshidaLift(f1, f2, job.tower)
    table = lift.expansion_up_to(cfg.bound)
    report = {"forms": [f1.label, f2.label], "bound": cfg.bound,
              "equivariance": check_equivariance(table),
              "cuspidality": check_cuspidality(table, f1.label != f2.label or f1.k != f2.k)}
    if cfg.ell is not None:
        try:
            place = PrimePlace(job.tower.top, cfg.ell)
        except ValueError as exc:
            raise ConfigError(f"ell = {cfg.ell}: {exc}") from exc
        integ = table_integrality(table, place)
        hist = {}
        for v in table.coeffs.values():
            for x in v.coeffs.tolist():
                val = place.valuation(x)
                key = "inf" if val == math.inf else str(val)
                hist[key] = hist.get(key, 0) + 1
        report["integrality"] = integ
        report["valuation_histogram"] = hist
    report["table"] = table.to_json()
    return report


def run_bessel(cfg: JobConfig, use_bound: bool) -> dict:
    job = Job(cfg)
    f1, f2 = job.pair()
    datum, group, chi = job.datum_and_character()
    lift = YoshidaLift(f1, f2, job.tower)
    source = lift
    need = required_bound(group)
    if use_bound:
        if cfg.bound < need:
            return {"error": "insufficient bound", "bound": cfg.bound, "required_bound": need}
        source = lift.expansion_up_to(need)
    rep = bessel_identity_check(f1, f2, datum, chi, source)
    out = {"fourier_side": rep.fourier_side, "product_side": rep.product_side,
           "e_factor": rep.e_factor, "theta1": rep.theta1, "theta2": rep.theta2,
           "equal": rep.equal, **rep.info}
    out.update({"forms": [f1.label, f2.label], "character": chi.to_json(),
                "datum": datum.to_json(), "required_bound": need})
    return out


def run_modl(cfg: JobConfig) -> dict:
    if cfg.ell is None:
        raise ConfigError("modl needs ell")
    job = Job(cfg)
    f1, f2 = job.pair()
    datum, group, chi = job.datum_and_character()
    warnings = []
    lift = YoshidaLift(f1, f2, job.tower)
    rep = bessel_identity_check(f1, f2, datum, chi, lift)
    if _is_zero(rep.e_factor):
        msg = "e(f, phi) = 0: the Atkin-Lehner signs are opposed, the Bessel period vanishes"
        log.warning(msg)
        warnings.append(msg)
    try:
        wit = nonvanishing_witness(f1, f2, datum, chi, cfg.ell, lift, rep)
    except ValueError as exc:
        raise ConfigError(f"ell = {cfg.ell}: {exc}") from exc
    table = lift.expansion_up_to(cfg.bound)
    place = PrimePlace(job.tower.top, cfg.ell)
    red = reduce_mod_lambda(table, place, datum.C ** 2 * -datum.K.disc)
    return {"forms": [f1.label, f2.label], "warnings": warnings, "witness": wit,
            "nonzero_mod_lambda": red["nonzero"], "flagged_in_bound": red["flagged"],
            "bound": cfg.bound, "note": "finite search; no claim about infinitely many coefficients"}


def run_verify(cfg: JobConfig) -> dict:
    from .polyrep import pairing_invariance_check, pluriharmonic_check
    rng = random.Random(cfg.seed)
    k1, k2 = cfg.k
    checks = {}
    checks["pairing"] = pairing_invariance_check(min(2 * k1, 10), rng, trials=20)
    checks["pluriharmonic"] = pluriharmonic_check((k1, k2))["pluriharmonic"]
    ctx = QuatContext(cfg.n_minus, cfg.n_plus)
    mass, expected = ctx.mass_check()
    checks["mass"] = mass == expected
    job = Job(cfg)
    job._ctx = ctx
    space = FormSpace(ctx, k1, job.tower)
    ops = [space.hecke(p) for p in space.good_primes(7)] + \
          [space.atkin_lehner(q) for q in space.level_primes()]
    from . import linalg
    checks["hecke_commute"] = all(linalg.mat_mul(a, b) == linalg.mat_mul(b, a)
                                  for a in ops for b in ops)
    f1, f2 = job.pair()
    table = YoshidaLift(f1, f2, job.tower).expansion_up_to(min(cfg.bound, 4))
    checks["equivariance"] = bool(check_equivariance(table)["consistent"])
    checks["ok"] = all(v for v in checks.values())
    return checks


COMMON = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False)),
    click.option("--cache-dir", type=click.Path(file_okay=False)),
    click.option("--bound", type=int),
    click.option("--seed", type=int),
    click.option("--n-minus", type=int),
    click.option("--n-plus", type=int),
    click.option("--weights", type=(int, int)),
    click.option("--K", "K", type=int),
    click.option("--C", "C", type=int),
    click.option("--phi-index", "phi", type=int),
    click.option("--ell", type=int),
    click.option("--form1-index", type=int),
    click.option("--form2-index", type=int),
    click.option("--verbose", "-v", is_flag=True),
]


def common(fn):
    for opt in reversed(COMMON):
        fn = opt(fn)
    return fn


def _setup(opts: dict) -> tuple[JobConfig, Cache]:
    handler = logging.StreamHandler(click.get_text_stream("stderr"))
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.handlers = [handler]
    log.propagate = False
    log.setLevel(logging.INFO if opts.pop("verbose") else logging.WARNING)
    path = opts.pop("config_path")
    cache = Cache(opts.pop("cache_dir"))
    i1, i2 = opts.pop("form1_index"), opts.pop("form2_index")
    if i1 is not None:
        opts["form1"] = {"index": i1}
    if i2 is not None:
        opts["form2"] = {"index": i2}
    return load_config(path, opts), cache


def _emit(command: str, result: dict, cached: bool, started: float):
    result = dict(result)
    result["command"] = command
    result["cached"] = cached
    log.info("%s finished in %.2fs%s", command, time.time() - started, " (cache)" if cached else "")
    click.echo(json.dumps(_clean(result), sort_keys=True, indent=1))


@click.group()
@click.version_option(__version__)
def main():
    """Yoshida lifts on definite quaternion algebras and their Bessel periods."""


@main.command()
@common
def classset(**opts):
    """Ideal classes of the Eichler order and the mass check."""
    t = time.time()
    cfg, cache = _setup(opts)
    res, hit = cache.fetch("classset", cfg.subtree("n_minus", "n_plus"), lambda: _clean(run_classset(cfg)))
    _emit("classset", res, hit, t)


@main.command("eigenforms")
@common
def eigenforms_cmd(**opts):
    """Hecke eigenforms (one per Galois orbit) in both weights."""
    t = time.time()
    cfg, cache = _setup(opts)
    res, hit = cache.fetch("eigenforms", cfg.subtree("n_minus", "n_plus", "weights", "seed"),
                           lambda: _clean(run_eigenforms(cfg)))
    _emit("eigenforms", res, hit, t)


@main.command()
@common
def lift(**opts):
    """Fourier table of the Yoshida lift up to the bound, with invariant checks."""
    t = time.time()
    cfg, cache = _setup(opts)
    keys = ("n_minus", "n_plus", "weights", "form1", "form2", "bound", "ell", "seed")
    res, hit = cache.fetch("lift", cfg.subtree(*keys), lambda: _clean(run_lift(cfg)))
    _emit("lift", res, hit, t)


@main.command()
@click.option("--use-table", is_flag=True, help="read coefficients from a table of the given bound")
@common
def bessel(use_table, **opts):
    """Both sides of the Bessel period identity; exit code 0 iff they are equal."""
    t = time.time()
    cfg, cache = _setup(opts)
    keys = ("n_minus", "n_plus", "weights", "form1", "form2", "K", "C", "phi", "seed")
    sub = cfg.subtree(*keys) | ({"bound": cfg.bound} if use_table else {})
    res, hit = cache.fetch("bessel", sub, lambda: _clean(run_bessel(cfg, use_table)))
    _emit("bessel", res, hit, t)
    if "error" in res:
        log.error("bound %s is too small; need bound >= %s", res["bound"], res["required_bound"])
        sys.exit(3)
    sys.exit(0 if res["equal"] else 1)


@main.command()
@common
def modl(**opts):
    """Finite search for coefficients that are nonzero modulo a prime above ell."""
    t = time.time()
    cfg, cache = _setup(opts)
    keys = ("n_minus", "n_plus", "weights", "form1", "form2", "K", "C", "phi", "ell", "bound", "seed")
    res, hit = cache.fetch("modl", cfg.subtree(*keys), lambda: _clean(run_modl(cfg)))
    _emit("modl", res, hit, t)
    sys.exit(0 if res["witness"]["ok"] else 1)


@main.command()
@common
def verify(**opts):
    """Quick invariant suite on the configured level and weights."""
    t = time.time()
    cfg, _ = _setup(opts)
    res = run_verify(cfg)
    _emit("verify", res, False, t)
    sys.exit(0 if res["ok"] else 1)


if __name__ == "__main__":
    main()
