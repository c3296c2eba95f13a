"""``mohinrec`` command line: ingest, motif-adj, similarity, evaluate, sweep.

Settings resolve as command-line flags > config file (or manifest) > defaults.
Exit codes: 0 ok, 2 usage, 3 input/parse, 4 training, 5 internal.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import MohinrecError, UsageError, ValidationError
from .evaluation import ExperimentConfig, SplitConfig, run_experiment, run_sweep
from .factorization import MfConfig, dump_factors
from .fm import FmConfig, dump_model
from .ingest import HinGraph, load_hin, parse_trust
from .memp import MempConfig, MetaPath, commuting_matrix
from .motif import MotifId, motif_adjacency
from .sparse import dump_coo

log = logging.getLogger("mohinrec")

RATINGS_FILE = "ratings.tsv"
TRUST_FILE = "trust.tsv"

EXPERIMENT_KEYS = {
    "seed": int,
    "meta_paths": str,
    "motif": str,
    "motifs": str,
    "alpha_grid": str,
    "lambda_grid": str,
    "repeats": int,
    "train_frac": float,
    "valid_frac": float,
    "test_frac": float,
    "rank": int,
    "mf_lr": float,
    "mf_epochs": int,
    "mf_reg": float,
    "k_factors": int,
    "fm_lr": float,
    "fm_epochs": int,
    "clamp": "bool",
    "max_nnz_per_row": int,
    "jobs": int,
}


def default_seed() -> int:
    env = os.environ.get("MOHINREC_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"MOHINREC_SEED={env!r} is not an integer") from None


def defaults() -> dict:
    return {
        "seed": default_seed(),
        "meta_paths": "U,B;U,U,B",
        "motif": "M3",
        "motifs": "M1,M2,M3,M4,M5,M6,M7",
        "alpha_grid": "0:1:0.1",
        "lambda_grid": "0.001,0.01,0.1,1",
        "repeats": 5,
        "train_frac": 0.8,
        "valid_frac": 0.1,
        "test_frac": 0.1,
        "rank": MfConfig.rank,
        "mf_lr": MfConfig.learning_rate,
        "mf_epochs": MfConfig.epochs,
        "mf_reg": MfConfig.reg,
        "k_factors": FmConfig.k_factors,
        "fm_lr": FmConfig.learning_rate,
        "fm_epochs": FmConfig.epochs,
        "clamp": True,
        "max_nnz_per_row": 0,
        "jobs": 1,
    }


def _coerce(key, value):
    kind = EXPERIMENT_KEYS.get(key)
    if kind is None:
        raise UsageError(f"unknown setting {key!r}")
    if kind == "bool":
        if isinstance(value, bool):
            return value
        low = str(value).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"setting {key} expects a boolean, got {value!r}")
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"setting {key} expects {kind.__name__}, got {value!r}") from None


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as f:
        for n, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            out[key] = _coerce(key, value)
    return out


def parse_grid(spec: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive) or a comma list."""
    spec = spec.strip()
    try:
        if ":" in spec:
            start, stop, step = (float(s) for s in spec.split(":"))
            if step <= 0:
                raise UsageError(f"grid step must be positive in {spec!r}")
            n = int(round((stop - start) / step))
            vals = [round(start + k * step, 10) for k in range(n + 1)]
            return tuple(v for v in vals if v <= stop + 1e-12)
        return tuple(float(s) for s in spec.split(",") if s.strip())
    except ValueError:
        raise UsageError(f"cannot parse grid {spec!r}") from None


def _motif_or_none(s):
    if s is None or str(s).strip().lower() in ("", "none", "-"):
        return None
    return MotifId.parse(s)


def build_experiment(conf: dict) -> ExperimentConfig:
    seed = conf["seed"]
    try:
        motif = _motif_or_none(conf["motif"])
        memps = []
        for p in conf["meta_paths"].split(";"):
            mp = MetaPath.parse(p)
            memps.append(MempConfig(mp, motif if mp.same_type_steps() else None))
        return ExperimentConfig(
            memp_configs=tuple(memps),
            mf=MfConfig(conf["rank"], conf["mf_lr"], conf["mf_epochs"], conf["mf_reg"], seed),
            fm=FmConfig(conf["k_factors"], conf["fm_lr"], conf["fm_epochs"], seed=seed),
            split=SplitConfig(conf["train_frac"], conf["valid_frac"], conf["test_frac"], seed),
            repeats=conf["repeats"],
            alpha_grid=parse_grid(conf["alpha_grid"]),
            lambda_grid=parse_grid(conf["lambda_grid"]),
            clamp=conf["clamp"],
            max_nnz_per_row=conf["max_nnz_per_row"] or None,
            jobs=conf["jobs"],
        )
    except ValidationError as exc:
        raise UsageError(str(exc)) from None


def resolve(args, keys) -> dict:
    conf = defaults()
    layered = {}
    if getattr(args, "manifest", None):
        with open(args.manifest) as f:
            layered.update(json.load(f)["config"])
    if getattr(args, "config", None):
        layered.update(read_config_file(args.config))
    for key, value in layered.items():
        conf[key] = _coerce(key, value)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            conf[key] = _coerce(key, value)
    return conf


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def load_dataset(data_dir) -> HinGraph:
    d = Path(data_dir)
    with open(d / RATINGS_FILE) as fr, open(d / TRUST_FILE) as ft:
        graph, _ = load_hin(fr, ft, "tab", names=(str(d / RATINGS_FILE), str(d / TRUST_FILE)))
    return graph


def _input_digests(data_dir):
    d = Path(data_dir)
    return {name: _sha256(d / name) for name in (RATINGS_FILE, TRUST_FILE)}


def write_manifest(path, command, conf, data_dir):
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "config": conf,
        "data": str(data_dir),
        "inputs": _input_digests(data_dir),
        "seed": conf["seed"],
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _check_manifest_inputs(args, data_dir):
    if not getattr(args, "manifest", None):
        return
    with open(args.manifest) as f:
        recorded = json.load(f).get("inputs", {})
    if recorded and recorded != _input_digests(data_dir):
        log.warning("input files differ from those recorded in %s", args.manifest)


def _data_dir(args):
    if args.data:
        return args.data
    if getattr(args, "manifest", None):
        with open(args.manifest) as f:
            return json.load(f)["data"]
    raise UsageError("--data is required")


def table1_stats(graph: HinGraph) -> str:
    return (
        "users\titems\tratings\tsocial relations\n"
        f"{graph.n_users}\t{graph.n_items}\t{len(graph.ratings)}\t{graph.w_uu.nnz}\n"
    )


# commands ---------------------------------------------------------------------


def cmd_ingest(args):
    names = (args.ratings, args.trust)
    with open(args.ratings) as fr, open(args.trust) as ft:
        graph, trust = load_hin(fr, ft, args.delimiter, names=names)
    if len(graph.ratings) == 0:
        raise ValidationError(f"{args.ratings}: no ratings found")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / RATINGS_FILE, "w") as f:
        for u, b, r in graph.ratings:
            f.write(f"{graph.user_labels[u]}\t{graph.item_labels[b]}\t{r:.17g}\n")
    rows, cols, _ = graph.w_uu.coo()
    with open(out / TRUST_FILE, "w") as f:
        for a, b in zip(rows.tolist(), cols.tolist()):
            f.write(f"{graph.user_labels[a]}\t{graph.user_labels[b]}\n")
    (out / "users.txt").write_text("".join(lab + "\n" for lab in graph.user_labels))
    (out / "items.txt").write_text("".join(lab + "\n" for lab in graph.item_labels))
    (out / "w_uu.coo").write_text(dump_coo(graph.w_uu))
    (out / "w_ub.coo").write_text(dump_coo(graph.w_ub))
    stats = table1_stats(graph)
    (out / "stats.txt").write_text(stats)
    sys.stdout.write(stats)
    print(f"dropped trust edges: {trust.n_unknown} unknown user, {trust.n_self_loops} self-loop")
    return 0


def cmd_motif_adj(args):
    from .ingest import iter_records, resolve_delimiter

    with open(args.input) as f:
        lines = f.readlines()
    index: dict[str, int] = {}
    for _, parts in iter_records(lines, resolve_delimiter(args.delimiter), 2, args.input):
        index.setdefault(parts[0], len(index))
        index.setdefault(parts[1], len(index))
    trust = parse_trust(lines, index, args.delimiter, name=args.input)
    w = motif_adjacency(trust.matrix, MotifId.parse(args.motif))
    with open(args.output, "w") as f:
        dump_coo(w, f)
    print(f"{len(index)} nodes, {trust.matrix.nnz} edges, {w.nnz} motif-adjacency entries")
    return 0


def cmd_similarity(args):
    graph = load_dataset(args.data)
    try:
        cfg = MempConfig(MetaPath.parse(args.meta_path), _motif_or_none(args.motif), args.alpha)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    sim = commuting_matrix(graph, cfg, args.max_nnz_per_row or None)
    with open(args.output, "w") as f:
        dump_coo(sim.matrix, f)
    print(f"{cfg.label()}: {sim.matrix.shape[0]}x{sim.matrix.shape[1]}, nnz={sim.matrix.nnz}")
    return 0


def _method_name(cfg: ExperimentConfig) -> str:
    motifs = {c.motif for c in cfg.memp_configs if c.motif is not None}
    if not motifs or set(cfg.alpha_grid) == {0.0}:
        return "FMG"
    return "MoHINRec(" + ",".join(sorted(str(m) for m in motifs)) + ")"


def _write_outputs(out: Path, text: str, jsonl: str, timings=None):
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(text)
    (out / "runs.jsonl").write_text(jsonl)
    if timings is not None:
        (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    return hashlib.sha256(text.encode()).hexdigest()


def cmd_evaluate(args):
    conf = resolve(args, EXPERIMENT_KEYS)
    data_dir = _data_dir(args)
    cfg = build_experiment(conf)
    graph = load_dataset(data_dir)
    _check_manifest_inputs(args, data_dir)
    report = run_experiment(graph, cfg, keep_models=args.dump_models)
    out = Path(args.out)
    digest = _write_outputs(out, report.to_text(), report.to_jsonl(), report.timings)
    if args.dump_models:
        write_models(out / "models", report, cfg)
    write_manifest(out / "manifest.json", "evaluate", conf, data_dir)
    print(f"{'method':<16}{'RMSE':>10}{'MAE':>10}")
    print(f"{_method_name(cfg):<16}{report.mean_rmse:>10.4f}{report.mean_mae:>10.4f}")
    print(f"report sha256 {digest}")
    return 0


def write_models(root: Path, report, cfg: ExperimentConfig):
    """One directory per repeat: user/item factors per meta-path plus the FM model."""
    for repeat, (latents, model) in report.models.items():
        d = root / f"repeat{repeat}"
        d.mkdir(parents=True, exist_ok=True)
        for k, (memp, lf) in enumerate(zip(cfg.memp_configs, latents)):
            tag = f"path{k}_" + str(memp.meta_path).replace(",", "")
            with open(d / f"{tag}_users.txt", "w") as f:
                dump_factors(lf.user_factors, f)
            with open(d / f"{tag}_items.txt", "w") as f:
                dump_factors(lf.item_factors, f)
        with open(d / "fm_model.txt", "w") as f:
            dump_model(model, f)


def cmd_sweep(args):
    conf = resolve(args, EXPERIMENT_KEYS)
    data_dir = _data_dir(args)
    cfg = build_experiment(conf)
    graph = load_dataset(data_dir)
    _check_manifest_inputs(args, data_dir)
    motifs = [MotifId.parse(m) for m in conf["motifs"].split(",") if m.strip()]
    report = run_sweep(graph, cfg, motifs)
    out = Path(args.out)
    digest = _write_outputs(out, report.to_text(), report.to_jsonl())
    write_manifest(out / "manifest.json", "sweep", conf, data_dir)
    sys.stdout.write(report.to_text())
    print(f"report sha256 {digest}")
    return 0


def _add_experiment_flags(p):
    p.add_argument("--data", help="directory written by 'ingest'")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--manifest", help="replay the settings recorded in a manifest.json")
    p.add_argument("--seed", type=int)
    p.add_argument("--meta-paths", dest="meta_paths", help="';'-separated, e.g. 'U,B;U,U,B'")
    p.add_argument("--alpha-grid", dest="alpha_grid", help="start:stop:step or comma list")
    p.add_argument("--lambda-grid", dest="lambda_grid")
    p.add_argument("--repeats", type=int)
    p.add_argument("--rank", type=int)
    p.add_argument("--k-factors", dest="k_factors", type=int)
    p.add_argument("--mf-epochs", dest="mf_epochs", type=int)
    p.add_argument("--fm-epochs", dest="fm_epochs", type=int)
    p.add_argument("--mf-lr", dest="mf_lr", type=float)
    p.add_argument("--fm-lr", dest="fm_lr", type=float)
    p.add_argument("--mf-reg", dest="mf_reg", type=float)
    p.add_argument("--no-clamp", dest="clamp", action="store_const", const=False)
    p.add_argument("--max-nnz-per-row", dest="max_nnz_per_row", type=int)
    p.add_argument("--jobs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mohinrec")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse rating/trust files into a dataset directory")
    p.add_argument("--ratings", required=True)
    p.add_argument("--trust", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--delimiter", default="tab", choices=["tab", "comma", "space"])
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("motif-adj", help="motif adjacency of a trust file")
    p.add_argument("--motif", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--delimiter", default="tab", choices=["tab", "comma", "space"])
    p.set_defaults(func=cmd_motif_adj)

    p = sub.add_parser("similarity", help="(motif-enhanced) commuting matrix for one meta-path")
    p.add_argument("--data", required=True)
    p.add_argument("--meta-path", required=True)
    p.add_argument("--motif")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--output", required=True)
    p.add_argument("--max-nnz-per-row", type=int, default=0)
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("evaluate", help="validation-tuned experiment, test RMSE/MAE")
    _add_experiment_flags(p)
    p.add_argument("--motif")
    p.add_argument("--dump-models", dest="dump_models", action="store_true",
                   help="write the chosen latent factors and FM model of every repeat")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="test RMSE/MAE for every motif x alpha")
    _add_experiment_flags(p)
    p.add_argument("--motifs", help="comma list, default M1..M7")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MohinrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
