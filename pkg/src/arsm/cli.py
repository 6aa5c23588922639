"""``arsm`` command line: corpus synthesis, training, attacks, evaluation and single-query gating."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .adversarial import ATTACK_KINDS, AttackKind, attack_text
from .bench import SWEEP_GRIDS, ablate, ablation_record, ablation_table, sweep, sweep_tsv
from .config import ConfigError, GlobalConfig, load_config, read_pairs
from .corpus import World, load_samples, load_world, synth_corpus, write_corpus
from .evaluation import evaluate, format_report
from .evidence import EvidenceError, credibility_rank, ingest, retrieve_topk
from .featurizer import embed, tokenize
from .graph import GraphError, consistency_score, extract_entities, load_graph
from .lexicon import LexiconError, default_lexicons, load_lexicons
from .model import init_params, load_checkpoint, save_checkpoint
from .pipeline import AblationSpec, Pipeline
from .trainer import closed_loop

log = logging.getLogger("arsm")


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise UsageError(f"--set expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = v
    return out


def _config(args, base: dict | None = None, **extra) -> GlobalConfig:
    """Checkpoint config (if any), then --config file, then --set, then explicit flags."""
    pairs = {k: str(v) for k, v in (base or {}).items()}
    if getattr(args, "config", None):
        pairs.update(read_pairs(args.config))
    pairs.update(_overrides(getattr(args, "set", None)))
    if getattr(args, "seed", None) is not None:
        pairs["seed"] = str(args.seed)
    pairs.update({k: str(v) for k, v in extra.items() if v is not None})
    return load_config(None, pairs)


def _split_path(path: str, default_split: str = "test") -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / f"{default_split}.jsonl"
    elif not p.exists() and p.with_suffix(".jsonl").exists():
        p = p.with_suffix(".jsonl")
    if not p.exists():
        raise FileNotFoundError(str(p))
    return p


def _checkpoint(path: str):
    p = Path(path)
    if p.is_dir():
        p = p / "best.json"
    elif not p.exists() and p.with_suffix(".json").exists():
        p = p.with_suffix(".json")
    if not p.exists():
        raise FileNotFoundError(str(p))
    return load_checkpoint(p)


def _ablation(spec: str | None) -> AblationSpec:
    if not spec:
        return AblationSpec()
    names = {"risk": "risk_perception", "evidence": "evidence_retrieval", "consistency": "consistency_verification",
             "reweighting": "confidence_reweighting"}
    flags = {}
    for part in spec.split(","):
        part = part.strip()
        key = names.get(part, part)
        if key not in names.values():
            raise UsageError(f"unknown stage {part!r}; choose from {', '.join(names)}")
        flags[key] = True
    return AblationSpec(**flags)


def _meta(cfg: GlobalConfig) -> dict:
    return {"config_hash": cfg.config_hash(), "config": cfg.as_dict(), "arsm_version": __version__}


# -- subcommands ----------------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = _config(args, n_total=args.n)
    world, samples = synth_corpus(cfg)
    paths = write_corpus(args.out, cfg, world, samples)
    print(f"wrote {len(samples)} samples, {len(world.graph)} graph edges, {len(world.store)} evidence records to {args.out}")
    for name, p in paths.items():
        print(f"  {name:<9} {p}")
    return 0


def _load_split(data: Path, split: str):
    p = data / f"{split}.jsonl"
    if not p.exists():
        raise FileNotFoundError(str(p))
    return load_samples(p)


def cmd_train(args) -> int:
    data = Path(args.data)
    manifest = data / "manifest.json"
    base = json.loads(manifest.read_text())["config"] if manifest.exists() else None
    cfg = _config(args, base, rounds=args.rounds)
    world = load_world(data, cfg.d)
    train, val = _load_split(data, "train"), _load_split(data, "val")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    classes = world.class_names

    def on_round(r, theta, round_cfg, rec):
        save_checkpoint(out / f"round{r}.json", theta, classes=classes, round=r, **_meta(round_cfg))
        print(f"round {r}: train reward {rec.train_reward:.4f} ({'kept' if rec.checkpoint_accepted else 'reverted'}), "
              f"proposal {rec.proposal} -> {rec.proposal_reward:.4f} ({'kept' if rec.proposal_accepted else 'rejected'})")

    res = closed_loop(world, train, val, cfg, on_round=on_round)
    save_checkpoint(out / "best.json", res.theta, classes=classes, **_meta(res.cfg))
    _write(out / "history.json", _dump(res.history_record() | {"config_hash": cfg.config_hash()}))
    rows = [json.dumps({"round": r, **asdict(e)}, sort_keys=True) for r, logs in enumerate(res.epoch_logs) for e in logs]
    _write(out / "losses.jsonl", "".join(row + "\n" for row in rows))
    print(f"best reward {res.accepted_rewards[-1]:.4f}; checkpoint {out / 'best.json'}")
    return 0


def cmd_attack(args) -> int:
    path = _split_path(args.dataset)
    lex_path = path.parent / "lexicon.lex"
    lex = load_lexicons(lex_path) if lex_path.exists() else default_lexicons()
    kinds = list(ATTACK_KINDS) if args.kind == "all" else [AttackKind(args.kind)]
    rng = np.random.default_rng([_config(args).seed, 3])
    rows = []
    counts = {k.value: 0 for k in kinds}
    for s in load_samples(path):
        kind = kinds[int(rng.integers(len(kinds)))]
        text, claim, applied = attack_text(s.base_text, kind, lex, rng)
        counts[kind.value] += applied
        rows.append(json.dumps({
            "id": s.id, "kind": kind.value, "applied": applied, "text": text, "base_text": s.base_text,
            "y": s.y, "label": s.label, "should_refuse": kind.should_refuse,
            "claim": asdict(claim) if claim else None,
        }, sort_keys=True))
    out = Path(args.out) if args.out else path.with_name(path.stem + ".attacked.jsonl")
    _write(out, "".join(r + "\n" for r in rows))
    print(f"wrote {len(rows)} attacked samples to {out}: {counts}")
    return 0


def _eval_setup(args):
    theta, meta = _checkpoint(args.ckpt)
    split = _split_path(args.data)
    cfg = _config(args, meta.get("config"))
    world = load_world(split.parent, cfg.d)
    return Pipeline(world, theta, cfg), load_samples(split), split


def cmd_evaluate(args) -> int:
    pipe, samples, split = _eval_setup(args)
    ablation = _ablation(args.ablate)
    rep = evaluate(pipe, samples, ablation, strict=args.strict or None)
    print(format_report(rep, f"{split} [{ablation.name}]"))
    out = Path(args.out) if args.out else split.with_name(split.stem + ".report.json")
    _write(out, _dump({"report": rep.as_record(), "ablation": ablation.name, "dataset": split.name, **_meta(pipe.cfg)}))
    _write(out.with_name(out.stem + ".timing.json"), _dump({"latency_ms_mean": rep.latency_ms_mean}))
    return 0


def cmd_ablate(args) -> int:
    pipe, samples, split = _eval_setup(args)
    rows = ablate(pipe, samples)
    print(ablation_table(rows))
    out = Path(args.out) if args.out else split.with_name(split.stem + ".ablation.json")
    _write(out, _dump({"rows": ablation_record(rows), "dataset": split.name, **_meta(pipe.cfg)}))
    return 0


def cmd_sweep(args) -> int:
    pipe, samples, split = _eval_setup(args)
    values = [float(v) for v in args.values.split(",")] if args.values else list(SWEEP_GRIDS[args.axis])
    train = val = None
    if args.axis == "adv_ratio":
        train, val = _load_split(split.parent, "train"), _load_split(split.parent, "val")
    rows = sweep(args.axis, values, pipe.world, pipe.theta, pipe.cfg, samples, train, val)
    text = sweep_tsv(args.axis, rows)
    print(text, end="")
    if args.out:
        _write(Path(args.out), f"# config_hash\t{pipe.cfg.config_hash()}\n" + text)
    return 0


def cmd_gate(args) -> int:
    if args.ckpt:
        theta, meta = _checkpoint(args.ckpt)
        cfg = _config(args, meta.get("config"))
    else:
        cfg = _config(args)
        theta = None
    if args.data:
        world = load_world(args.data, cfg.d)
    else:
        world, _ = synth_corpus(cfg)
    if theta is None:
        theta = init_params(len(world.templates), cfg.d)
        log.warning("no checkpoint given: decision head is untrained")
    trace = Pipeline(world, theta, cfg).run(args.query, _ablation(args.ablate))
    print(_dump(trace.as_record(world.class_names) | {"config_hash": cfg.config_hash()}), end="")
    return 0


def cmd_evidence(args) -> int:
    cfg = _config(args)
    store = ingest(args.file, cfg.d)
    if args.action == "ingest":
        print(f"{args.file}: {len(store)} records")
        return 0
    if not args.query:
        raise UsageError("evidence query needs a query text")
    x = embed(args.query, cfg.d)
    q = tokenize(args.query)
    cands = retrieve_topk(store, x, q, args.k or cfg.k, cfg.lam)
    bundle = credibility_rank(cands, x, q, cfg.mu, args.m or cfg.m, cfg.lam)
    print(_dump(bundle.as_record()), end="")
    return 0


def cmd_graph(args) -> int:
    cfg = _config(args)
    if args.data:
        world = load_world(args.data, cfg.d)
        graph, lex, templates = world.graph, world.lex, world.templates
    else:
        seeded: World | None = None if args.graph and not args.template else synth_corpus(cfg.replace(n_total=0))[0]
        graph = load_graph(args.graph) if args.graph else seeded.graph
        lex = load_lexicons(args.lexicon) if args.lexicon else (seeded.lex if seeded else default_lexicons())
        templates = seeded.templates if seeded else []
    tpl = None
    if args.template:
        match = [t for t in templates if t.name == args.template]
        if not match:
            raise UsageError(f"unknown answer template {args.template!r}")
        tpl = match[0]
    out = extract_entities(args.text, lex, tpl)
    res = consistency_score(out, graph, cfg.tau_cons, cfg.consistency_gate)
    print(_dump({
        "entities": sorted(out.entity_ids),
        "relations": sorted(list(r) for r in out.asserted_relations),
        "c_pairs": res.c_pairs,
        "c_edge_normalized": res.c_edge_normalized,
        "n_edges": res.n_edges,
        "passed": res.passed,
    }), end="")
    return 0


def cmd_model(args) -> int:
    theta, meta = _checkpoint(args.ckpt)
    info = {
        "version": theta.version,
        "n_classes": theta.n_classes,
        "dim": theta.dim,
        "weight_norm": float(np.linalg.norm(theta.W)),
        "refusal_bias": theta.b_ref,
        "classes": meta.get("classes"),
        "config_hash": meta.get("config_hash"),
        "thresholds": {k: meta.get("config", {}).get(k) for k in ("tau_sem", "tau_inj", "tau_risk", "tau_conf", "tau_conf_star")},
    }
    print(_dump(info), end="")
    return 0


# -- parser ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="arsm", description="Adversarially robust, security-gated medical decision pipeline.")
    p.add_argument("--version", action="version", version=f"arsm {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate the synthetic world and corpus")
    s.add_argument("--n", type=int, help="total number of samples")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", parents=[common], help="closed-loop training")
    s.add_argument("--data", required=True, help="corpus directory written by synth")
    s.add_argument("--rounds", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("attack", parents=[common], help="apply text attacks to a split")
    s.add_argument("dataset")
    s.add_argument("--kind", default="all", choices=["all"] + [k.value for k in ATTACK_KINDS])
    s.add_argument("--out")
    s.set_defaults(func=cmd_attack, seed=42)

    for name, func, helptext in (
        ("evaluate", cmd_evaluate, "benchmark metrics of a checkpoint"),
        ("ablate", cmd_ablate, "full pipeline against single-stage ablations"),
        ("sweep", cmd_sweep, "sensitivity sweep over one parameter"),
    ):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--ckpt", required=True, help="checkpoint file or training output directory")
        s.add_argument("--data", required=True, help="split file, or corpus directory (uses test)")
        s.add_argument("--out")
        if name == "evaluate":
            s.add_argument("--strict", action="store_true", help="count refusals as wrong in accuracy")
            s.add_argument("--ablate", help="comma-separated stages to disable: risk, evidence, consistency, reweighting")
        if name == "sweep":
            s.add_argument("--axis", required=True, choices=sorted(SWEEP_GRIDS))
            s.add_argument("--values", help="comma-separated grid (default: built-in grid)")
        s.set_defaults(func=func)

    s = sub.add_parser("gate", parents=[common], help="run one query through the pipeline and print the trace")
    s.add_argument("query")
    s.add_argument("--ckpt")
    s.add_argument("--data", help="corpus directory (default: synthesize the seeded world)")
    s.add_argument("--ablate")
    s.set_defaults(func=cmd_gate)

    s = sub.add_parser("evidence", parents=[common], help="evidence store tools")
    s.add_argument("action", choices=["ingest", "query"])
    s.add_argument("file")
    s.add_argument("query", nargs="?")
    s.add_argument("--k", type=int)
    s.add_argument("--m", type=int)
    s.set_defaults(func=cmd_evidence)

    s = sub.add_parser("graph", parents=[common], help="knowledge-graph tools")
    s.add_argument("action", choices=["check"])
    s.add_argument("text")
    s.add_argument("--graph")
    s.add_argument("--lexicon")
    s.add_argument("--data")
    s.add_argument("--template", help="answer template whose relations the text asserts")
    s.set_defaults(func=cmd_graph)

    s = sub.add_parser("model", parents=[common], help="checkpoint tools")
    s.add_argument("action", choices=["inspect"])
    s.add_argument("ckpt")
    s.set_defaults(func=cmd_model)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"arsm: file not found: {exc.filename or exc}", file=sys.stderr)
        return 1
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"arsm: error: {exc}", file=sys.stderr)
        return 2
    except (LexiconError, GraphError, EvidenceError, ValueError) as exc:
        print(f"arsm: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
