"""Flat key-value experiment configuration files.

One ``key = value`` per line, ``#`` starts a comment, dotted keys name
sections. Threshold quads are repeated ``quad = x2 y2 x1 y1`` lines.

    n = 1000
    reps = 20000
    seed = 7
    correlation.kind = ar1
    correlation.phi = 0.5
    missingness.kind = exchangeable
    p_distribution.kind = uniform
    quad = 0 1 1 0
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .dependence import CorrelationModel
from .engine import ExperimentConfig
from .extremal import Convention, NormingConstants
from .limitlaw import ThresholdQuad
from .missing import MissingnessModel, PDistribution, load_patterns


class ConfigError(ValueError):
    pass


KNOWN_KEYS = {
    "n", "reps", "seed", "workers", "sampler", "norming", "quad",
    "correlation.kind", "correlation.phi", "correlation.c", "correlation.alpha",
    "missingness.kind", "missingness.p", "missingness.p01", "missingness.p10",
    "missingness.patterns", "missingness.pattern_file", "missingness.p_limit",
    "p_distribution.kind", "p_distribution.p", "p_distribution.a", "p_distribution.b",
    "p_distribution.alpha", "p_distribution.beta", "p_distribution.atoms",
    "norming.a_n", "norming.b_n", "norming.c_n", "norming.d_n", "norming.convention",
}


def parse_pairs(text: str, source: str = "<config>") -> tuple[dict[str, str], list[tuple[int, str]]]:
    values: dict[str, str] = {}
    quads: list[tuple[int, str]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key == "quad":
            quads.append((lineno, value))
        else:
            values[key] = value
    return values, quads


def _num(values: dict, key: str, cast=float, default=None):
    if key not in values:
        if default is None:
            raise ConfigError(f"{key}: missing")
        return default
    try:
        return cast(values[key])
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {values[key]!r} as {cast.__name__}") from None


def parse_quad(text: str, where: str = "quad") -> ThresholdQuad:
    parts = text.replace(",", " ").split()
    if len(parts) != 4:
        raise ConfigError(f"{where}: expected four levels x2 y2 x1 y1, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {text!r}") from None
    try:
        return ThresholdQuad(*vals)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_p_distribution(values: dict) -> PDistribution:
    kind = values.get("p_distribution.kind", "point")
    try:
        if kind == "point":
            return PDistribution("point", p=_num(values, "p_distribution.p", default=1.0))
        if kind == "uniform":
            return PDistribution(
                "uniform",
                a=_num(values, "p_distribution.a", default=0.0),
                b=_num(values, "p_distribution.b", default=1.0),
            )
        if kind == "beta":
            return PDistribution(
                "beta",
                alpha=_num(values, "p_distribution.alpha"),
                beta=_num(values, "p_distribution.beta"),
            )
        if kind == "discrete":
            raw = values.get("p_distribution.atoms", "")
            atoms = []
            for tok in raw.split():
                v, _, w = tok.partition(":")
                atoms.append((float(v), float(w)))
            return PDistribution("discrete", atoms=tuple(atoms))
        return PDistribution(kind)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc) if str(exc).startswith("p_distribution") else f"p_distribution: {exc}") from None


def parse_p_spec(spec: str) -> PDistribution:
    """Compact form used on the command line: ``point:0.5``, ``uniform:0,1``,
    ``beta:2,2``, ``discrete:0.2:0.5,0.8:0.5``."""
    kind, _, rest = spec.partition(":")
    args = [a for a in rest.split(",") if a]
    values = {"p_distribution.kind": kind}
    if kind == "point" and args:
        values["p_distribution.p"] = args[0]
    elif kind == "uniform" and len(args) == 2:
        values["p_distribution.a"], values["p_distribution.b"] = args
    elif kind == "beta" and len(args) == 2:
        values["p_distribution.alpha"], values["p_distribution.beta"] = args
    elif kind == "discrete":
        values["p_distribution.atoms"] = " ".join(args)
    elif kind in ("point", "uniform", "beta") and args:
        raise ConfigError(f"p_distribution: bad arguments in {spec!r}")
    return parse_p_distribution(values)


def parse_correlation(values: dict) -> CorrelationModel:
    kind = values.get("correlation.kind", "iid")
    try:
        return CorrelationModel(
            kind,
            phi=_num(values, "correlation.phi", default=0.0),
            c=_num(values, "correlation.c", default=1.0),
            alpha=_num(values, "correlation.alpha", default=1.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_model_spec(spec: str) -> CorrelationModel:
    """``iid``, ``ar1:0.5``, ``power:1,0.75``, ``log:1``."""
    kind, _, rest = spec.partition(":")
    args = [a for a in rest.split(",") if a]
    keys = {"iid": [], "ar1": ["phi"], "power": ["c", "alpha"], "log": ["c"]}
    if kind not in keys:
        raise ConfigError(f"correlation.kind: unknown kind {kind!r}")
    if len(args) != len(keys[kind]):
        raise ConfigError(f"correlation: {kind} takes parameters {keys[kind]}, got {spec!r}")
    values = {"correlation.kind": kind}
    values.update({f"correlation.{k}": v for k, v in zip(keys[kind], args)})
    return parse_correlation(values)


def parse_missingness(values: dict, base_dir: Optional[Path]) -> MissingnessModel:
    kind = values.get("missingness.kind", "bernoulli")
    try:
        if kind == "bernoulli":
            return MissingnessModel("bernoulli", p=_num(values, "missingness.p", default=1.0))
        if kind == "exchangeable":
            return MissingnessModel("exchangeable", pdist=parse_p_distribution(values))
        if kind == "markov":
            return MissingnessModel(
                "markov",
                p01=_num(values, "missingness.p01"),
                p10=_num(values, "missingness.p10"),
            )
        if kind == "pattern":
            if "missingness.patterns" in values:
                toks = values["missingness.patterns"].split()
                if any(set(t) - {"0", "1"} for t in toks):
                    raise ConfigError("missingness.patterns: entries must be 0/1 strings")
                patterns = tuple(tuple(int(ch) for ch in t) for t in toks)
            elif "missingness.pattern_file" in values:
                path = Path(values["missingness.pattern_file"])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                try:
                    patterns = load_patterns(path)
                except OSError as exc:
                    raise ConfigError(f"missingness.pattern_file: cannot read {path}: {exc.strerror}") from None
            else:
                raise ConfigError("missingness.patterns: pattern model needs patterns or pattern_file")
            p_limit = _num(values, "missingness.p_limit") if "missingness.p_limit" in values else None
            return MissingnessModel("pattern", patterns=patterns, p_limit=p_limit)
        return MissingnessModel(kind)
    except ConfigError:
        raise
    except ValueError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(("missingness", "p_distribution")) else f"missingness: {msg}") from None


def parse_norming(values: dict, n: int) -> Optional[NormingConstants]:
    mode = values.get("norming", "auto")
    if mode == "auto":
        return None
    if mode != "explicit":
        raise ConfigError(f"norming: expected 'auto' or 'explicit', got {mode!r}")
    conv = values.get("norming.convention", "general")
    try:
        convention = Convention(conv)
    except ValueError:
        raise ConfigError(f"norming.convention: expected 'general' or 'gaussian', got {conv!r}") from None
    try:
        return NormingConstants(
            _num(values, "norming.a_n"), _num(values, "norming.b_n"),
            _num(values, "norming.c_n"), _num(values, "norming.d_n"), n, convention,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"norming: {exc}") from None


def parse_config(text: str, source: str = "<config>", base_dir: Optional[Path] = None,
                 overrides: Optional[dict] = None) -> ExperimentConfig:
    values, quad_lines = parse_pairs(text, source)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = str(val)
    n = _num(values, "n", int)
    reps = _num(values, "reps", int)
    seed = _num(values, "seed", int, default=0)
    workers = _num(values, "workers", int, default=1)
    quads = [parse_quad(v, f"{source}:{ln}: quad") for ln, v in quad_lines]
    corr = parse_correlation(values)
    miss = parse_missingness(values, base_dir)
    norming = parse_norming(values, n)
    try:
        return ExperimentConfig(
            corr, miss, n, reps, quads, seed, workers, norming, values.get("sampler", "auto")
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    return parse_config(text, str(path), path.parent, overrides)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def config_to_text(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(config_to_text(cfg)) == cfg."""
    lines = [
        f"n = {cfg.n}",
        f"reps = {cfg.reps}",
        f"seed = {cfg.base_seed}",
        f"workers = {cfg.workers}",
        f"sampler = {cfg.sampler}",
        f"correlation.kind = {cfg.correlation.kind}",
    ]
    lines += [f"correlation.{k} = {_fmt(v)}" for k, v in cfg.correlation.params().items()]
    m = cfg.missingness
    lines.append(f"missingness.kind = {m.kind}")
    if m.kind == "bernoulli":
        lines.append(f"missingness.p = {_fmt(m.p)}")
    elif m.kind == "markov":
        lines += [f"missingness.p01 = {_fmt(m.p01)}", f"missingness.p10 = {_fmt(m.p10)}"]
    elif m.kind == "pattern":
        lines.append("missingness.patterns = " + " ".join("".join(map(str, p)) for p in m.patterns))
        if m.p_limit is not None:
            lines.append(f"missingness.p_limit = {_fmt(m.p_limit)}")
    elif m.kind == "exchangeable":
        pd = m.pdist
        lines.append(f"p_distribution.kind = {pd.kind}")
        lines += [f"p_distribution.{k} = {_fmt(v)}" for k, v in pd.params().items()]
    if cfg.norming is None:
        lines.append("norming = auto")
    else:
        nc = cfg.norming
        lines += [
            "norming = explicit",
            f"norming.a_n = {nc.a_n!r}", f"norming.b_n = {nc.b_n!r}",
            f"norming.c_n = {nc.c_n!r}", f"norming.d_n = {nc.d_n!r}",
            f"norming.convention = {nc.convention.value}",
        ]
    lines += ["quad = " + " ".join(repr(float(v)) for v in q.as_tuple()) for q in cfg.thresholds]
    return "\n".join(lines) + "\n"
