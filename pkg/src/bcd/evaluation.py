"""Measurement harness: pairwise ROC comparison of the four hashes,
permutation tuning via balanced accuracy, accuracy/precision/recall on
balanced samples, and the containment experiment.

Ground truth is symbol-name equality over named functions only; unnamed
(lifter-labelled) functions never contribute labelled pairs.
"""

from __future__ import annotations

import csv
import glob
import os
import random
from dataclasses import dataclass, field
from itertools import combinations

from . import fuzzy_hash as fh
from .errors import UnhashableError
from .ir_corpus import TokenStream, base_name, parse_module, tokenize_module

KNOWN_ARCHES = {
    "arm", "arm4vl", "arm5vl", "arm6vl", "aarch64",
    "mips", "mipsel", "x86", "i586", "i686", "x64", "powerpc", "ppc",
}

DEFAULT_THRESHOLDS: dict[str, list[float]] = {
    "minhash": [t / 100 for t in range(0, 101, 5)],
    "ctph": list(range(0, 101, 5)),
    "simhash": list(range(1, 40, 2)),
    "tlsh": list(range(0, 201, 10)),
}


@dataclass(frozen=True)
class CorpusFunction:
    stream: TokenStream
    is_named: bool

    @property
    def name(self) -> str:
        return self.stream.function_name

    @property
    def label(self) -> str:
        return base_name(self.stream.function_name)

    @property
    def arch(self) -> str | None:
        return self.stream.arch_tag


def arch_from_filename(path: str) -> str | None:
    stem = os.path.splitext(os.path.basename(path))[0]
    tail = stem.rsplit("_", 1)[-1].lower()
    return tail if tail in KNOWN_ARCHES else None


def load_corpus_dir(directory: str) -> list[CorpusFunction]:
    """All functions of every .ll file under a directory, arch-tagged from
    the ``*_<arch>.ll`` filename convention."""
    corpus: list[CorpusFunction] = []
    for path in sorted(glob.glob(os.path.join(directory, "*.ll"))):
        with open(path, encoding="utf-8") as fh_:
            text = fh_.read()
        module = parse_module(text, arch_tag=arch_from_filename(path), source_path=path)
        streams = tokenize_module(module)
        for func, stream in zip(module.functions, streams):
            if not stream.tokens:
                continue
            corpus.append(CorpusFunction(stream=stream, is_named=func.is_named))
    return corpus


@dataclass(frozen=True)
class RocRow:
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def tpr(self) -> float | None:
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    @property
    def fpr(self) -> float | None:
        neg = self.fp + self.tn
        return self.fp / neg if neg else None

    @property
    def tnr(self) -> float | None:
        neg = self.fp + self.tn
        return self.tn / neg if neg else None

    @property
    def pair_count(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class EvalReport:
    rows: dict[str, list[RocRow]] = field(default_factory=dict)
    auc: dict[str, float | None] = field(default_factory=dict)
    pair_counts: dict[str, int] = field(default_factory=dict)
    positives: dict[str, int] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)


def _pair_scores(
    corpus: list[CorpusFunction],
    algorithm: str,
    p: int,
    seed: int,
    window: int,
) -> tuple[list[tuple[bool, float]], int]:
    """Score every unordered pair of named, hashable functions.

    Returns (list of (same_name, raw score), count of functions the
    algorithm could not hash).
    """
    named = [f for f in corpus if f.is_named]
    digests: list[tuple[CorpusFunction, object]] = []
    unhashable = 0
    for f in named:
        try:
            if algorithm == "minhash":
                d = fh.minhash_sign(f.stream, p=p, seed=seed, window=window)
            elif algorithm == "simhash":
                d = fh.simhash_digest(f.stream, seed=seed, window=window)
            elif algorithm == "ctph":
                d = fh.ctph_digest(f.stream.serialize())
            elif algorithm == "tlsh":
                d = fh.tlsh_digest(f.stream.serialize())
            else:
                raise ValueError(f"unknown algorithm {algorithm!r}")
        except UnhashableError:
            unhashable += 1
            continue
        digests.append((f, d))

    scores: list[tuple[bool, float]] = []
    for (fa, da), (fb, db) in combinations(digests, 2):
        if algorithm == "minhash":
            raw = fh.minhash_similarity(da, db)
        elif algorithm == "simhash":
            raw = fh.simhash_distance(da, db)
        elif algorithm == "ctph":
            raw = fh.ctph_compare(da, db)
        else:
            raw = fh.tlsh_distance(da, db)
        scores.append((fa.label == fb.label, raw))
    return scores, unhashable


def _confusion(scores: list[tuple[bool, float]], algorithm: str, threshold: float) -> RocRow:
    tp = fp = tn = fn = 0
    for same, raw in scores:
        similar = fh.verdict(algorithm, raw, threshold).similar
        if same and similar:
            tp += 1
        elif same:
            fn += 1
        elif similar:
            fp += 1
        else:
            tn += 1
    return RocRow(threshold=threshold, tp=tp, fp=fp, tn=tn, fn=fn)


def pairwise_compare(
    corpus: list[CorpusFunction],
    algorithm: str,
    thresholds: list[float] | None = None,
    p: int = fh.DEFAULT_P,
    seed: int = fh.DEFAULT_SEED,
    window: int = fh.DEFAULT_WINDOW,
) -> list[RocRow]:
    """One RocRow per threshold over all unordered named-function pairs."""
    thresholds = thresholds if thresholds is not None else DEFAULT_THRESHOLDS[algorithm]
    scores, _ = _pair_scores(corpus, algorithm, p, seed, window)
    return [_confusion(scores, algorithm, t) for t in thresholds]


def roc_auc(rows: list[RocRow]) -> float | None:
    """Trapezoid area under threshold-sorted (FPR, TPR) points with
    (0,0) and (1,1) anchors."""
    points = []
    for row in rows:
        if row.tpr is None or row.fpr is None:
            return None
        points.append((row.fpr, row.tpr))
    points.extend([(0.0, 0.0), (1.0, 1.0)])
    points.sort()
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2
    return area


def evaluate(
    corpus: list[CorpusFunction],
    algorithms: list[str] | None = None,
    thresholds: dict[str, list[float]] | None = None,
    p: int = fh.DEFAULT_P,
    seed: int = fh.DEFAULT_SEED,
    window: int = fh.DEFAULT_WINDOW,
) -> EvalReport:
    report = EvalReport()
    for algorithm in algorithms or list(fh.ALGORITHMS):
        sweep = (thresholds or {}).get(algorithm) or DEFAULT_THRESHOLDS[algorithm]
        scores, unhashable = _pair_scores(corpus, algorithm, p, seed, window)
        rows = [_confusion(scores, algorithm, t) for t in sweep]
        report.rows[algorithm] = rows
        report.auc[algorithm] = roc_auc(rows)
        report.pair_counts[algorithm] = len(scores)
        report.positives[algorithm] = sum(1 for same, _ in scores if same)
        if report.positives[algorithm] == 0:
            report.flags.append(f"degenerate: no positives ({algorithm})")
        if unhashable:
            report.flags.append(f"{algorithm}: {unhashable} functions unhashable")
    return report


def roc_emit(report: EvalReport, out_dir: str, basename: str = "roc") -> tuple[str, str]:
    """Write rows as CSV and the ROC plot as PNG; returns both paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{basename}.csv")
    png_path = os.path.join(out_dir, f"{basename}.png")

    with open(csv_path, "w", newline="") as fh_:
        writer = csv.writer(fh_)
        writer.writerow(["algorithm", "threshold", "tp", "fp", "tn", "fn", "tpr", "fpr"])
        for algorithm, rows in report.rows.items():
            for row in rows:
                writer.writerow(
                    [
                        algorithm,
                        row.threshold,
                        row.tp,
                        row.fp,
                        row.tn,
                        row.fn,
                        "" if row.tpr is None else f"{row.tpr:.6f}",
                        "" if row.fpr is None else f"{row.fpr:.6f}",
                    ]
                )

    from matplotlib.figure import Figure

    fig = Figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot(111)
    for algorithm, rows in report.rows.items():
        pts = sorted(
            (row.fpr, row.tpr)
            for row in rows
            if row.fpr is not None and row.tpr is not None
        )
        if not pts:
            continue
        auc = report.auc.get(algorithm)
        label = algorithm if auc is None else f"{algorithm} (AUC={auc:.3f})"
        ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o", markersize=3, label=label)
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=0.8)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title("ROC")
    ax.legend(loc="lower right", fontsize=8)
    fig.savefig(png_path, dpi=120)
    return csv_path, png_path


@dataclass(frozen=True)
class TuneRow:
    p: int
    tpr: float | None
    tnr: float | None
    balanced_accuracy: float | None
    best: bool = False


def tune_permutations(
    corpus: list[CorpusFunction],
    p_values: list[int],
    threshold: float = 0.5,
    seed: int = fh.DEFAULT_SEED,
    window: int = fh.DEFAULT_WINDOW,
) -> list[TuneRow]:
    """Balanced accuracy (TPR+TNR)/2 per permutation count; argmax marked."""
    rows: list[TuneRow] = []
    for p in p_values:
        scores, _ = _pair_scores(corpus, "minhash", p, seed, window)
        row = _confusion(scores, "minhash", threshold)
        ba = None
        if row.tpr is not None and row.tnr is not None:
            ba = (row.tpr + row.tnr) / 2
        rows.append(TuneRow(p=p, tpr=row.tpr, tnr=row.tnr, balanced_accuracy=ba))
    best = max(
        (r for r in rows if r.balanced_accuracy is not None),
        key=lambda r: r.balanced_accuracy,
        default=None,
    )
    return [
        TuneRow(r.p, r.tpr, r.tnr, r.balanced_accuracy, best=(best is not None and r.p == best.p))
        for r in rows
    ]


def balanced_accuracy(tpr: float, tnr: float) -> float:
    return (tpr + tnr) / 2


def f_score(precision: float, recall: float, beta: float = 1.0) -> float:
    if precision == 0 and recall == 0:
        return 0.0
    b2 = beta * beta
    return (1 + b2) * precision * recall / (b2 * precision + recall)


@dataclass(frozen=True)
class AccuracyReport:
    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None
    f2: float | None
    threshold: float
    p: int
    sample_seed: int
    pairs_sampled: int
    clamped: bool = False


def accuracy_report(
    corpus: list[CorpusFunction],
    threshold: float = 0.5,
    p: int = fh.DEFAULT_P,
    max_pairs_per_class: int | None = None,
    sample_seed: int = 0,
    seed: int = fh.DEFAULT_SEED,
    window: int = fh.DEFAULT_WINDOW,
) -> AccuracyReport:
    """Standard metrics over a class-balanced sample of labelled pairs."""
    scores, _ = _pair_scores(corpus, "minhash", p, seed, window)
    positives = [s for s in scores if s[0]]
    negatives = [s for s in scores if not s[0]]
    if positives and negatives:
        per_class = min(len(positives), len(negatives))
    else:
        per_class = max(len(positives), len(negatives))  # degenerate single-class corpus
    clamped = False
    if max_pairs_per_class is not None:
        if max_pairs_per_class > per_class:
            clamped = True
        per_class = min(per_class, max_pairs_per_class)
    rng = random.Random(sample_seed)
    sampled = rng.sample(positives, min(per_class, len(positives))) + rng.sample(
        negatives, min(per_class, len(negatives))
    )

    tp = fp = tn = fn = 0
    for same, raw in sampled:
        similar = fh.verdict("minhash", raw, threshold).similar
        if same and similar:
            tp += 1
        elif same:
            fn += 1
        elif similar:
            fp += 1
        else:
            tn += 1
    total = tp + fp + tn + fn
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if (tp + fp) else None
    recall = tp / (tp + fn) if (tp + fn) else None
    f1 = f_score(precision, recall, 1.0) if precision is not None and recall is not None else None
    f2 = f_score(precision, recall, 2.0) if precision is not None and recall is not None else None
    return AccuracyReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        f2=f2,
        threshold=threshold,
        p=p,
        sample_seed=sample_seed,
        pairs_sampled=total,
        clamped=clamped,
    )


@dataclass
class ContainmentReport:
    p_values: list[int]
    part_labels: list[str]
    combined_labels: list[str]
    matrices: dict[int, list[list[float]]]
    arch_pair_averages: dict[int, dict[tuple[str, str], float]]


def containment_experiment(
    parts: list[TokenStream],
    combined: list[TokenStream],
    p_values: list[int],
    seed: int = fh.DEFAULT_SEED,
    window: int = fh.DEFAULT_WINDOW,
) -> ContainmentReport:
    """Jaccard estimates of part functions against combined functions, per p."""

    def tag(stream: TokenStream) -> str:
        return f"{stream.function_name} {stream.arch_tag or '?'}"

    matrices: dict[int, list[list[float]]] = {}
    averages: dict[int, dict[tuple[str, str], float]] = {}
    for p in p_values:
        part_sigs = [fh.minhash_sign(s, p=p, seed=seed, window=window) for s in parts]
        comb_sigs = [fh.minhash_sign(s, p=p, seed=seed, window=window) for s in combined]
        matrix = [
            [fh.minhash_similarity(ps, cs) for cs in comb_sigs] for ps in part_sigs
        ]
        matrices[p] = matrix

        sums: dict[tuple[str, str], list[float]] = {}
        for i, ps in enumerate(parts):
            for j, cs in enumerate(combined):
                a1, a2 = ps.arch_tag or "?", cs.arch_tag or "?"
                if a1 == a2:
                    continue
                key = tuple(sorted((a1, a2)))
                sums.setdefault(key, []).append(matrix[i][j])
        averages[p] = {k: sum(v) / len(v) for k, v in sums.items()}
    return ContainmentReport(
        p_values=list(p_values),
        part_labels=[tag(s) for s in parts],
        combined_labels=[tag(s) for s in combined],
        matrices=matrices,
        arch_pair_averages=averages,
    )


def containment_emit(report: ContainmentReport, out_dir: str, basename: str = "containment") -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{basename}.csv")
    with open(path, "w", newline="") as fh_:
        writer = csv.writer(fh_)
        writer.writerow(["p", "part", "combined", "score"])
        for p in report.p_values:
            matrix = report.matrices[p]
            for i, part in enumerate(report.part_labels):
                for j, comb in enumerate(report.combined_labels):
                    writer.writerow([p, part, comb, f"{matrix[i][j]:.8f}"])
    return path


# --- synthetic corpora -------------------------------------------------------

_OPCODES = [
    "add", "sub", "mul", "udiv", "srem", "and", "or", "xor", "shl", "lshr",
    "load", "store", "icmp", "br", "call", "ret", "zext", "trunc", "phi",
    "getelementptr", "select", "inttoptr", "ptrtoint",
]


def _random_tokens(rng: random.Random, n: int) -> list[str]:
    out = []
    while len(out) < n:
        op = rng.choice(_OPCODES)
        out.append(op)
        for _ in range(rng.randint(1, 3)):
            out.append(rng.choice(["%r", "%stack_var", f"{rng.randint(0, 255)},", "label"]))
    return out[:n]


def _mutate(rng: random.Random, tokens: list[str], rate: float) -> list[str]:
    out = []
    for t in tokens:
        roll = rng.random()
        if roll < rate * 0.6:
            out.append(rng.choice(["%r", f"{rng.randint(0, 9999)},", rng.choice(_OPCODES)]))
        elif roll < rate * 0.8:
            continue  # deletion
        else:
            out.append(t)
            if roll > 1 - rate * 0.2:
                out.append(rng.choice(_OPCODES))  # insertion
    return out or list(tokens)


def make_clone_corpus(
    families: int = 10,
    clones_per_family: int = 4,
    singletons: int = 12,
    tokens_per_function: int = 80,
    mutation_rate: float = 0.2,
    seed: int = 1,
) -> list[CorpusFunction]:
    """Planted clone families: same-name functions are mutated copies across
    pretend architectures; singletons provide unrelated negatives."""
    rng = random.Random(seed)
    arches = ["arm", "mips", "x86", "powerpc"]
    corpus: list[CorpusFunction] = []
    for fam in range(families):
        base = _random_tokens(rng, tokens_per_function)
        for c in range(clones_per_family):
            tokens = base if c == 0 else _mutate(rng, base, mutation_rate)
            arch = arches[c % len(arches)]
            corpus.append(
                CorpusFunction(
                    stream=TokenStream(
                        tokens=tuple(tokens),
                        function_name=f"fam{fam:03d}",
                        source_path=f"synthetic_{arch}.ll",
                        arch_tag=arch,
                    ),
                    is_named=True,
                )
            )
    for s in range(singletons):
        tokens = _random_tokens(rng, tokens_per_function)
        corpus.append(
            CorpusFunction(
                stream=TokenStream(
                    tokens=tuple(tokens),
                    function_name=f"lone{s:03d}",
                    source_path="synthetic_arm.ll",
                    arch_tag="arm",
                ),
                is_named=True,
            )
        )
    return corpus
