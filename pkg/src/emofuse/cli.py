"""Command-line pipeline driver.

Subcommands cover the full workflow: build the emoji co-occurrence graph
from an unlabeled corpus, train the graph autoencoder, train and evaluate
the sentiment classifier, export embeddings, and emit the clustering matrix
for heatmap rendering. Every subcommand takes --config plus repeatable
--set key=value overrides; --seed shortcuts seed control. All randomness
flows from that seed, so reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .autodiff import Tensor, load_tensors, save_tensors
from .clustering import cluster_similarity, write_similarity_tsv
from .config import RunConfig, apply_overrides, config_from_dict, load_config
from .exceptions import ConfigError, EmofuseError
from .graph import build_cooc_graph, count_cooccurrences, load_graph, save_graph
from .model import SentimentModel, build_model
from .pipeline import evaluate, train_classifier, write_history_csv, write_loss_csv
from .senses import load_emojinet
from .text_encoder import WordEmbeddingTable
from .tokenization import load_labeled_dataset, load_unlabeled_corpus, tokenize
from .vgae import EmojiEmbeddings, VgaeConfig, VgaeParams, embed_nodes, train_vgae

logger = logging.getLogger("emofuse")

GRAPH_CHECKPOINT = "vgae.ntc"
EMBEDDINGS_FILE = "embeddings.txt"
CLASSIFIER_CHECKPOINT = "classifier.ntc"
CLASSIFIER_META = "classifier_meta.json"


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config)
    if args.set:
        apply_overrides(config, args.set)
    if args.seed is not None:
        config.seed = args.seed
    return config


def _require(config: RunConfig, *names: str):
    for name in names:
        if not getattr(config, name):
            raise ConfigError(f"config key {name!r} is required for this subcommand")


def _out_path(config: RunConfig, name: str) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    return os.path.join(config.output_dir, name)


def cmd_build_graph(args) -> int:
    config = _load_run_config(args)
    _require(config, "unlabeled_corpus", "inventory", "word_vectors", "graph_dir")
    inventory = load_emojinet(config.inventory)
    table = WordEmbeddingTable.load(config.word_vectors)
    posts = (tokenize(text) for text in load_unlabeled_corpus(config.unlabeled_corpus))
    counts = count_cooccurrences(posts)
    graph = build_cooc_graph(counts, inventory, table, min_pair_count=config.min_pair_count)
    save_graph(graph, config.graph_dir)
    print(f"graph: {graph.size} nodes, {len(graph.pair_counts)} edges -> {config.graph_dir}")
    return 0


def cmd_train_vgae(args) -> int:
    config = _load_run_config(args)
    _require(config, "graph_dir")
    graph = load_graph(config.graph_dir)
    vgae_config = VgaeConfig(hidden=config.vgae_hidden, latent=config.vgae_latent,
                             epochs=config.vgae_epochs, lr=config.vgae_lr)
    rng = np.random.default_rng(config.seed)
    embeddings, params, history = train_vgae(graph, vgae_config, rng)
    embeddings_path = _out_path(config, EMBEDDINGS_FILE)
    embeddings.save(embeddings_path)
    save_tensors(_out_path(config, GRAPH_CHECKPOINT), params.named())
    write_loss_csv(_out_path(config, "vgae_history.csv"), history)
    final_loss = history[-1] if history else float("nan")
    print(f"vgae: {len(embeddings.ids)} embeddings of dim {embeddings.dimension} "
          f"-> {embeddings_path} (final loss {final_loss})")
    return 0


def cmd_export_embeddings(args) -> int:
    config = _load_run_config(args)
    _require(config, "graph_dir", "checkpoint")
    graph = load_graph(config.graph_dir)
    tensors = load_tensors(config.checkpoint)
    try:
        params = VgaeParams(
            w_in=Tensor(tensors["vgae.w_in"]),
            w_mu=Tensor(tensors["vgae.w_mu"]),
            w_logvar=Tensor(tensors["vgae.w_logvar"]),
        )
    except KeyError as err:
        raise ConfigError(f"checkpoint {config.checkpoint} missing tensor {err}") from err
    embeddings = embed_nodes(graph, params)
    path = config.embeddings or _out_path(config, EMBEDDINGS_FILE)
    embeddings.save(path)
    print(f"embeddings: {len(embeddings.ids)} x {embeddings.dimension} -> {path}")
    return 0


def cmd_train_classifier(args) -> int:
    config = _load_run_config(args)
    _require(config, "train_data", "word_vectors", "embeddings")
    posts, _ = load_labeled_dataset(config.train_data)
    table = WordEmbeddingTable.load(config.word_vectors)
    embeddings = EmojiEmbeddings.load(config.embeddings)
    rng = np.random.default_rng(config.seed)
    model = SentimentModel(config, table, embeddings, rng)
    history = train_classifier(model, posts, rng)
    save_tensors(_out_path(config, CLASSIFIER_CHECKPOINT), model.state_tensors())
    meta = {"config": config.as_dict(), "emoji_ids": model.embedding_ids}
    with open(_out_path(config, CLASSIFIER_META), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, ensure_ascii=False)
    write_history_csv(_out_path(config, "train_history.csv"), history)
    final = history[-1] if history else None
    summary = f"loss {final.loss} acc {final.accuracy}" if final else "no epochs"
    print(f"classifier: {len(posts)} posts, {config.epochs} epochs ({summary}) -> {config.output_dir}")
    return 0


def load_classifier(checkpoint_path, meta_path, word_table: WordEmbeddingTable) -> SentimentModel:
    """Rebuild a trained model from its tensor container and metadata echo."""
    try:
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read classifier metadata {meta_path}: {err}") from err
    config = config_from_dict(meta["config"])
    tensors = load_tensors(checkpoint_path)
    ids = list(meta["emoji_ids"])
    matrix = tensors.get("emoji_matrix")
    if matrix is None or matrix.shape[0] != len(ids):
        raise ConfigError(f"checkpoint {checkpoint_path} has no emoji matrix matching its id list")
    model = build_model(config, word_table, EmojiEmbeddings(ids=ids, vectors=matrix))
    model.load_state(tensors)
    return model


def cmd_evaluate(args) -> int:
    config = _load_run_config(args)
    _require(config, "test_data", "word_vectors")
    checkpoint = config.checkpoint or _out_path(config, CLASSIFIER_CHECKPOINT)
    meta_path = os.path.splitext(checkpoint)[0] + "_meta.json" if config.checkpoint else _out_path(config, CLASSIFIER_META)
    table = WordEmbeddingTable.load(config.word_vectors)
    model = load_classifier(checkpoint, meta_path, table)
    posts, _ = load_labeled_dataset(config.test_data)
    labels = {p.label for p in posts}
    if any(label >= model.config.num_classes for label in labels):
        raise ConfigError(
            f"test labels {sorted(labels)} exceed the checkpoint's {model.config.num_classes} classes")
    report = evaluate(model, posts)
    text = report.to_json()
    print(text)
    with open(_out_path(config, "eval_report.json"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return 0


def cmd_cluster_viz(args) -> int:
    config = _load_run_config(args)
    _require(config, "embeddings", "unlabeled_corpus")
    embeddings = EmojiEmbeddings.load(config.embeddings)
    posts = (tokenize(text) for text in load_unlabeled_corpus(config.unlabeled_corpus))
    counts = count_cooccurrences(posts)
    top_k = min(config.top_k, len(embeddings.ids))
    result = cluster_similarity(embeddings, counts.occurrences, top_k)
    matrix_path = _out_path(config, "cluster_matrix.tsv")
    write_similarity_tsv(matrix_path, result)
    leaves_path = _out_path(config, "cluster_leaves.txt")
    with open(leaves_path, "w", encoding="utf-8") as fh:
        for label in result.labels:
            fh.write(label + "\n")
    print(f"clustering: {len(result.labels)} emojis -> {matrix_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emofuse",
        description="Emoji co-occurrence graph embeddings and text/emoji sentiment classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "build-graph": (cmd_build_graph, "Build the weighted emoji co-occurrence graph from an unlabeled corpus."),
        "train-vgae": (cmd_train_vgae, "Train the graph autoencoder and export emoji embeddings."),
        "train-classifier": (cmd_train_classifier, "Train the fusion classifier on a labeled corpus."),
        "evaluate": (cmd_evaluate, "Evaluate a trained classifier on a labeled corpus."),
        "export-embeddings": (cmd_export_embeddings, "Re-export embeddings from a graph autoencoder checkpoint."),
        "cluster-viz": (cmd_cluster_viz, "Emit the clustered similarity matrix of the most frequent emojis."),
    }
    for name, (handler, help_text) in commands.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the run configuration file")
        cmd.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                         help="override a config key (repeatable)")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.set_defaults(handler=handler)
    return parser


def cli_main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except EmofuseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main():
    raise SystemExit(cli_main())
