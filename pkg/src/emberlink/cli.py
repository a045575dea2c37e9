"""Command-line pipeline: coverage, retrofit, train, tune-lsh, match, pipeline.

Exit codes: 0 success, 2 I/O or file-format failure, 3 violated
precondition/contract, 4 internal error.  Every run is deterministic
given (config, seed) and the run directory always receives the fully
resolved config echo.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import blocking, classifier, metrics, retrofit as retrofit_mod
from .config import RunConfig, load_config, write_config
from .data_model import (
    MATCH,
    load_matches,
    load_table,
    validate_matches,
)
from .embeddings import coverage as coverage_op
from .embeddings import load_embedding_text, save_embedding_text
from .errors import (
    ConfigError,
    ContractError,
    EmberlinkError,
    FormatError,
    IntegrityError,
    PreconditionError,
    TrainingError,
)

EXIT_OK = 0
EXIT_IO = 2
EXIT_CONTRACT = 3
EXIT_INTERNAL = 4


def _outdir(cfg: RunConfig) -> str:
    out = cfg.get("paths.out")
    os.makedirs(out, exist_ok=True)
    return out


def _echo_config(cfg: RunConfig, out: str) -> None:
    write_config(cfg, os.path.join(out, "config_resolved.cfg"))


def _load_tables(cfg: RunConfig):
    id_col = cfg.get("data.id_column")
    left = load_table(cfg.require("paths.left"), id_column=id_col)
    right = load_table(cfg.require("paths.right"), id_column=id_col)
    return left, right


def _train_config(cfg: RunConfig) -> classifier.TrainConfig:
    method = cfg.get("compose.method")
    sim_kind = cfg.get("sim.kind")
    if method != "avg" and sim_kind == "cosine":
        sim_kind = "difference"
    return classifier.TrainConfig(
        composition=method,
        similarity=sim_kind,
        learning_rate=cfg.get("train.learning_rate"),
        epochs=cfg.get("train.epochs"),
        batch_size=cfg.get("train.batch_size"),
        l2=cfg.get("train.l2"),
        embedding_update_rate=cfg.get("train.embedding_update_rate"),
        neg_ratio=cfg.get("train.neg_ratio"),
        folds=cfg.get("train.folds"),
        noise_fraction=cfg.get("train.noise_fraction"),
        seed=cfg.get("seed"),
        fine_tune_embeddings=cfg.get("train.fine_tune_embeddings"),
        hidden_dim=cfg.get("compose.hidden_dim"),
        head_hidden=cfg.get("train.head_hidden"),
    )


def cmd_coverage(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    _echo_config(cfg, out)
    dictionary = load_embedding_text(cfg.require("paths.embeddings"))
    left, right = _load_tables(cfg)
    reports = {"left": coverage_op(dictionary, left), "right": coverage_op(dictionary, right)}
    payload = {side: rep.to_dict() for side, rep in reports.items()}
    with open(os.path.join(out, "coverage.json"), "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out, "coverage.txt"), "w", encoding="utf-8") as f:
        for side, rep in reports.items():
            f.write(f"{side}.total_tokens={rep.total_tokens}\n")
            f.write(f"{side}.known_tokens={rep.known_tokens}\n")
            f.write(f"{side}.ratio={rep.ratio}\n")
            f.write(f"{side}.oov_count={len(rep.oov_words)}\n")
    if all(rep.ratio == 1.0 for rep in reports.values()):
        print("full coverage: every token has a pre-trained vector")
    else:
        worst = min(rep.ratio for rep in reports.values())
        print(
            f"partial coverage (min ratio {worst:.4f}); "
            "consider the retrofit stage for out-of-vocabulary words"
        )
    return EXIT_OK


def _retrofitted_path(out: str) -> str:
    return os.path.join(out, "retrofitted_embeddings.txt")


def cmd_retrofit(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    _echo_config(cfg, out)
    dictionary = load_embedding_text(cfg.require("paths.embeddings"))
    left, right = _load_tables(cfg)
    rcfg = retrofit_mod.RetrofitConfig(
        alpha=cfg.get("retrofit.alpha"),
        beta=cfg.get("retrofit.beta"),
        iterations=cfg.get("retrofit.iterations"),
        init_neighbors=cfg.get("retrofit.init_neighbors"),
    )
    graph = retrofit_mod.build_graph([left, right], dictionary)
    seeded = retrofit_mod.init_oov(graph, dictionary, rcfg.init_neighbors)
    anchors = {w: seeded.lookup(w) for w in graph.vertices}
    psi_before = retrofit_mod.objective(anchors, anchors, graph, rcfg)
    fitted = retrofit_mod.retrofit(seeded, graph, rcfg)
    vectors = {w: fitted.lookup(w) for w in graph.vertices}
    psi_after = retrofit_mod.objective(vectors, anchors, graph, rcfg)
    save_embedding_text(fitted, _retrofitted_path(out))
    print(f"psi_before={psi_before!r}")
    print(f"psi_after={psi_after!r}")
    with open(os.path.join(out, "retrofit.json"), "w", encoding="utf-8") as f:
        json.dump(
            {
                "psi_before": psi_before, "psi_after": psi_after,
                "vertices": len(graph.vertices), "edges": len(graph.edges),
                "oov": len(graph.oov),
            },
            f, indent=2, sort_keys=True,
        )
        f.write("\n")
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    _echo_config(cfg, out)
    dictionary = load_embedding_text(cfg.require("paths.embeddings"))
    left, right = _load_tables(cfg)
    positives = load_matches(cfg.require("paths.matches"))
    validate_matches(positives, left, right)
    tcfg = _train_config(cfg)
    if len(positives) < tcfg.folds:
        raise PreconditionError(
            f"{len(positives)} positives cannot fill {tcfg.folds} folds"
        )
    threshold = classifier.positive_threshold(positives, left, right, dictionary)
    sample = classifier.sample_negatives(
        positives, left, right, dictionary,
        ratio=tcfg.neg_ratio, threshold=threshold, seed=tcfg.seed,
    )
    pairs = positives + sample.pairs
    if tcfg.noise_fraction > 0:
        pairs = classifier.inject_noise(pairs, tcfg.noise_fraction, seed=tcfg.seed)
    folds = classifier.kfold_eval(pairs, left, right, dictionary, tcfg)
    model = classifier.train(pairs, left, right, dictionary, tcfg)
    model_path = cfg.get("paths.model") or os.path.join(out, "model.npz")
    classifier.save_model(model, model_path)
    run_report = {
        "positives": len(positives),
        "negatives": len(sample.pairs),
        "negative_threshold": sample.threshold,
        "threshold_relaxed": sample.relaxed,
        "noise_fraction": tcfg.noise_fraction,
        "model_path": model_path,
    }
    with open(os.path.join(out, "train_report.json"), "w", encoding="utf-8") as f:
        json.dump({"run": run_report, "kfold": folds.to_dict()}, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(out, "fold_reports.txt"), "w", encoding="utf-8") as f:
        for i, rep in enumerate(folds.folds):
            f.write(f"fold{i}.precision={rep.precision}\n")
            f.write(f"fold{i}.recall={rep.recall}\n")
            f.write(f"fold{i}.f1={rep.f1}\n")
        f.write(f"mean.f1={folds.mean_f1}\n")
        f.write(f"std.f1={folds.std_f1}\n")
    print(
        f"trained on {len(pairs)} pairs; "
        f"mean F1 {folds.mean_f1:.4f} (std {folds.std_f1:.4f}); model at {model_path}"
    )
    return EXIT_OK


def cmd_tune_lsh(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    goal = blocking.TuningGoal(
        p1=cfg.require("tune.p1"), p2=cfg.require("tune.p2"), n=cfg.require("tune.n")
    )
    k, l = blocking.tune_params(goal)
    cfg.set("lsh.k", k)
    cfg.set("lsh.l", l)
    _echo_config(cfg, out)
    with open(os.path.join(out, "tuned.json"), "w", encoding="utf-8") as f:
        json.dump({"k": k, "l": l, "p1": goal.p1, "p2": goal.p2, "n": goal.n},
                  f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"K={k} L={l}")
    return EXIT_OK


def cmd_match(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    _echo_config(cfg, out)
    model = classifier.load_model(cfg.require("paths.model"))
    dictionary = load_embedding_text(cfg.require("paths.embeddings"))
    left, right = _load_tables(cfg)
    if left.schema.arity != model.num_attributes or right.schema.arity != model.num_attributes:
        raise ContractError(
            f"model expects {model.num_attributes} attributes, tables have "
            f"{left.schema.arity}/{right.schema.arity}"
        )
    truth = None
    matches_path = cfg.get("paths.matches")
    if matches_path:
        truth = [p.key() for p in load_matches(matches_path)]

    drs_left = {r.id: model.dr_for(r, dictionary) for r in left.records}
    drs_right = {r.id: model.dr_for(r, dictionary) for r in right.records}
    lsh_cfg = blocking.LshConfig(
        k=cfg.get("lsh.k"), l=cfg.get("lsh.l"),
        probe_radius=cfg.get("lsh.probe_radius"), top_n=cfg.get("lsh.top_n"),
        seed=cfg.get("seed"),
    )
    index = blocking.build_index(drs_left, lsh_cfg, right=drs_right)
    if lsh_cfg.probe_radius == 0 and lsh_cfg.top_n == 0:
        candidates = blocking.block_pairs(index)
    else:
        candidates = []
        for lid in left.ids:
            vec = drs_left[lid].vector
            cand_ids = blocking.candidates_multiprobe(
                index, vec, lsh_cfg.probe_radius, side="right"
            )
            if lsh_cfg.top_n > 0 and cand_ids:
                cand_ids = blocking.topn_filter(
                    vec, ((c, drs_right[c]) for c in sorted(cand_ids)), lsh_cfg.top_n
                )
            candidates.extend((lid, rid) for rid in cand_ids)
        candidates = sorted(set(candidates))

    predicted = []
    for lid, rid in candidates:
        prob, label = classifier.predict(
            model, (left.record(lid), right.record(rid)), dictionary
        )
        if label == MATCH:
            predicted.append((lid, rid, prob))
    predicted.sort(key=lambda t: (-t[2], t[0], t[1]))
    with open(os.path.join(out, "predictions.csv"), "w", encoding="utf-8") as f:
        f.write("left_id,right_id,probability\n")
        for lid, rid, prob in predicted:
            f.write(f"{lid},{rid},{prob!r}\n")

    block_rep = metrics.blocking_report(
        candidates, truth or [], n_left=len(left), n_right=len(right),
        occupancy=index.occupancy(),
    )
    metrics.write_report(block_rep, os.path.join(out, "blocking_report"))
    if truth:
        match_rep = metrics.precision_recall_f1(
            [(l, r) for l, r, _ in predicted], truth,
            universe_size=len(left) * len(right),
        )
        metrics.write_report(match_rep, os.path.join(out, "match_report"))
        print(
            f"{len(candidates)} candidates, {len(predicted)} predicted matches; "
            f"P={match_rep.precision:.4f} R={match_rep.recall:.4f} F1={match_rep.f1:.4f}"
        )
    else:
        print(f"{len(candidates)} candidates, {len(predicted)} predicted matches")
    return EXIT_OK


def cmd_pipeline(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    rc = cmd_coverage(cfg)
    if rc:
        return rc
    if cfg.get("retrofit.enabled"):
        rc = cmd_retrofit(cfg)
        if rc:
            return rc
        cfg.set("paths.embeddings", _retrofitted_path(out))
    if not cfg.get("paths.model"):
        cfg.set("paths.model", os.path.join(out, "model.npz"))
    rc = cmd_train(cfg)
    if rc:
        return rc
    if all(cfg.get(k) is not None for k in ("tune.p1", "tune.p2", "tune.n")):
        rc = cmd_tune_lsh(cfg)
        if rc:
            return rc
    rc = cmd_match(cfg)
    if rc:
        return rc
    _echo_config(cfg, out)
    return EXIT_OK


_COMMANDS = {
    "coverage": cmd_coverage,
    "retrofit": cmd_retrofit,
    "train": cmd_train,
    "tune-lsh": cmd_tune_lsh,
    "match": cmd_match,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="emberlink",
        description="Entity resolution with embedding tuple representations and LSH blocking",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default=None, help="override output directory")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.set("seed", args.seed)
        if args.out is not None:
            cfg.set("paths.out", args.out)
        return _COMMANDS[args.command](cfg)
    except (FileNotFoundError, IsADirectoryError, PermissionError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PreconditionError, ContractError, IntegrityError, ConfigError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EmberlinkError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
