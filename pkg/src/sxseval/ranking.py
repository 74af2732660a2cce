"""Segment- and system-level ranking agreement and system-pair selection.

The significance test is a paired sign-flip permutation test on per-segment
scores with an add-one p-value estimator, so p is always strictly positive
and reproducible for a fixed seed.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from .errors import WorkbenchError
from .model import (
    ComparisonLabel,
    MQM_SETTINGS,
    PraCounts,
    Project,
    SegmentRef,
    Setting,
    nfc,
)
from .agreement import comparison_label
from .scoring import aggregate, score_cells, z_normalize

_TRIAL_BATCH = 2048


def pra(
    labels_alpha: dict[object, ComparisonLabel],
    labels_beta: dict[object, ComparisonLabel],
) -> tuple[PraCounts, float]:
    """Pairwise ranking agreement between two settings' unit labels:
    (concordant + tied-in-both) / all units."""
    if set(labels_alpha) != set(labels_beta):
        raise WorkbenchError(
            "E_UNIT_MISMATCH",
            "the two settings label different unit sets",
            {
                "only_alpha": len(set(labels_alpha) - set(labels_beta)),
                "only_beta": len(set(labels_beta) - set(labels_alpha)),
            },
        )
    if not labels_alpha:
        raise WorkbenchError("E_UNIT_MISMATCH", "no units to compare")
    c = d = t_alpha = t_beta = t_both = 0
    for unit, la in labels_alpha.items():
        lb = labels_beta[unit]
        a_tie = la == ComparisonLabel.TIE
        b_tie = lb == ComparisonLabel.TIE
        if a_tie and b_tie:
            t_both += 1
        elif a_tie:
            t_alpha += 1
        elif b_tie:
            t_beta += 1
        elif la == lb:
            c += 1
        else:
            d += 1
    counts = PraCounts(c, d, t_alpha, t_beta, t_both)
    return counts, (c + t_both) / counts.total


def setting_unit_labels(
    project: Project, setting: Setting, use_z: bool = True
) -> dict[tuple[SegmentRef, str, str], ComparisonLabel]:
    """Per-(segment, designated pair) labels from segment mean scores.

    Side-by-side settings score each system within the explicit pairing;
    preference penalties are never z-normalized.
    """
    labels: dict[tuple[SegmentRef, str, str], ComparisonLabel] = {}
    for a, b in project.designated_pairs:
        table = _pair_table(project, setting, (a, b), use_z)
        for seg in project.segments:
            sa = table.segment_scores.get((a, seg))
            sb = table.segment_scores.get((b, seg))
            if sa is None or sb is None:
                continue
            labels[(seg, a, b)] = comparison_label(sa, sb)
    return labels


def _pair_table(project, setting, pair, use_z):
    cells = score_cells(project, setting, pair=pair)
    if use_z and setting in MQM_SETTINGS:
        # normalization statistics come from the annotator's full setting
        # score distribution, not just this pair
        full = z_normalize(score_cells(project, setting))
        params: dict[tuple[str, str, SegmentRef, str | None], float] = {}
        for cell in full:
            key = (cell.annotator, cell.system, cell.segment, cell.pair_partner)
            params[key] = cell.z
        cells = [
            replace(c, z=params[(c.annotator, c.system, c.segment, c.pair_partner)])
            for c in cells
        ]
    return aggregate(setting, cells, use_z and setting in MQM_SETTINGS)


@dataclass(frozen=True)
class SignificanceResult:
    better: str
    worse: str
    better_score: float
    worse_score: float
    p_value: float
    trials: int
    seed: int


def permutation_test(scores_a, scores_b, trials: int, seed: int) -> float:
    """Two-sided paired sign-flip test on |mean(a) - mean(b)|.

    Each trial independently swaps each pair with probability 1/2;
    p = (1 + #{trial statistic >= observed}) / (1 + trials).
    """
    a = np.asarray(list(scores_a), dtype=float)
    b = np.asarray(list(scores_b), dtype=float)
    if a.shape != b.shape:
        raise WorkbenchError(
            "E_LENGTH_MISMATCH", f"paired scores differ in length: {len(a)} vs {len(b)}"
        )
    if len(a) < 2:
        raise WorkbenchError("E_TOO_SHORT", "need at least 2 paired scores")
    if trials < 1:
        raise WorkbenchError("E_TOO_SHORT", "need at least 1 trial")
    diffs = a - b
    observed = abs(diffs.mean())
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        batch = min(_TRIAL_BATCH, trials - done)
        signs = rng.integers(0, 2, size=(batch, len(diffs))) * 2 - 1
        stats = np.abs((signs * diffs).mean(axis=1))
        hits += int(np.count_nonzero(stats >= observed))
        done += batch
    return (1 + hits) / (1 + trials)


def rank_system_pair(
    project: Project,
    setting: Setting,
    pair: tuple[str, str],
    trials: int = 10000,
    seed: int = 0,
    use_z: bool = True,
) -> SignificanceResult:
    """Order the pair by system score (lower is better, z-scored for the
    error-marking settings) and test the difference on segment scores."""
    table = _pair_table(project, setting, pair, use_z)
    a, b = pair
    segs_a = {seg for (sys, seg) in table.segment_scores if sys == a}
    segs_b = {seg for (sys, seg) in table.segment_scores if sys == b}
    if segs_a != segs_b:
        raise WorkbenchError(
            "E_SEGMENT_MISMATCH",
            f"{a} and {b} scored on different segments",
            {"only_a": len(segs_a - segs_b), "only_b": len(segs_b - segs_a)},
        )
    if not segs_a:
        raise WorkbenchError("E_SEGMENT_MISMATCH", f"no common segments for {a}/{b}")
    ordered = [seg for seg in project.segments if seg in segs_a]
    vec_a = [table.segment_scores[(a, seg)] for seg in ordered]
    vec_b = [table.segment_scores[(b, seg)] for seg in ordered]
    score_a = sum(vec_a) / len(vec_a)
    score_b = sum(vec_b) / len(vec_b)
    if (score_a, a) <= (score_b, b):
        better, worse = (a, score_a), (b, score_b)
    else:
        better, worse = (b, score_b), (a, score_a)
    p = permutation_test(vec_a, vec_b, trials, seed)
    return SignificanceResult(
        better=better[0],
        worse=worse[0],
        better_score=better[1],
        worse_score=worse[1],
        p_value=p,
        trials=trials,
        seed=seed,
    )


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _bleu_directional(candidates: list[list[str]], references: list[list[str]]) -> float:
    """Corpus BLEU-4: uniform weights, log-space geometric mean, exponential
    brevity penalty, no smoothing (any zero n-gram precision gives 0)."""
    matched = [0] * 4
    totals = [0] * 4
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            cand_counts = _ngram_counts(cand, n)
            ref_counts = _ngram_counts(ref, n)
            totals[n - 1] += sum(cand_counts.values())
            matched[n - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in cand_counts.items()
            )
    if cand_len == 0:
        return 0.0
    log_sum = 0.0
    for m, t in zip(matched, totals):
        if m == 0 or t == 0:
            return 0.0
        log_sum += 0.25 * math.log(m / t)
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(log_sum)


def cross_bleu(outputs_a: list[str], outputs_b: list[str]) -> float:
    """Text similarity of two systems' outputs: corpus BLEU-4 in both
    directions, arithmetically averaged, on a 0-100 scale."""
    if not outputs_a or len(outputs_a) != len(outputs_b):
        raise WorkbenchError("E_EMPTY", "need equal-length, non-empty output lists")
    tok_a = [nfc(t).split() for t in outputs_a]
    tok_b = [nfc(t).split() for t in outputs_b]
    ab = _bleu_directional(tok_a, tok_b)
    ba = _bleu_directional(tok_b, tok_a)
    return 100.0 * (ab + ba) / 2.0


@dataclass(frozen=True)
class PairSelection:
    top2: tuple[str, str]
    high_sim: tuple[tuple[str, str], tuple[str, str]]
    low_sim: tuple[tuple[str, str], tuple[str, str]]
    diagnostics: list[dict]


def select_pairs(
    systems: list[str],
    metric_scores: dict[str, list[float]],
    outputs: dict[str, list[str]],
    trials: int = 10000,
    seed: int = 0,
) -> PairSelection:
    """Pick 5 similar-quality pairs: the top two metric-ranked systems, the
    two most text-similar remaining pairs and the two least similar ones.

    Similar quality means the paired permutation test on the external
    per-segment metric scores gives p > 0.05. Higher metric scores are
    better. A system may appear in several groups.
    """
    systems = sorted(systems)
    if len(systems) < 6:
        raise WorkbenchError(
            "E_INSUFFICIENT_PAIRS", f"need at least 6 systems, got {len(systems)}"
        )
    for system in systems:
        if system not in metric_scores or system not in outputs:
            raise WorkbenchError(
                "E_INSUFFICIENT_PAIRS", f"missing scores or outputs for {system}"
            )

    means = {s: sum(metric_scores[s]) / len(metric_scores[s]) for s in systems}
    ranked = sorted(systems, key=lambda s: (-means[s], s))
    rank_of = {s: i + 1 for i, s in enumerate(ranked)}

    diagnostics: list[dict] = []
    p_values: dict[frozenset, float] = {}
    bleus: dict[frozenset, float] = {}
    for i, a in enumerate(ranked):
        for b in ranked[i + 1 :]:
            p = permutation_test(metric_scores[a], metric_scores[b], trials, seed)
            xb = cross_bleu(outputs[a], outputs[b])
            p_values[frozenset((a, b))] = p
            bleus[frozenset((a, b))] = xb
            diagnostics.append(
                {
                    "system_a": a,
                    "system_b": b,
                    "rank_a": rank_of[a],
                    "rank_b": rank_of[b],
                    "p_value": p,
                    "cross_bleu": xb,
                    "similar_quality": p > 0.05,
                }
            )

    top_pair = (ranked[0], ranked[1])
    if p_values[frozenset(top_pair)] <= 0.05:
        raise WorkbenchError(
            "E_INSUFFICIENT_PAIRS",
            "top two systems are not similar in quality",
            {"p_value": p_values[frozenset(top_pair)]},
        )

    candidates = [
        tuple(sorted(pair))
        for pair, p in p_values.items()
        if p > 0.05 and pair != frozenset(top_pair)
    ]
    if len(candidates) < 4:
        raise WorkbenchError(
            "E_INSUFFICIENT_PAIRS",
            f"only {len(candidates)} similar-quality pairs besides the top two",
        )
    by_bleu = sorted(candidates, key=lambda p: (-bleus[frozenset(p)], p))
    high_sim = (by_bleu[0], by_bleu[1])
    remaining = [p for p in by_bleu[2:]]
    if len(remaining) < 2:
        raise WorkbenchError("E_INSUFFICIENT_PAIRS", "not enough pairs for both groups")
    low_sim = (remaining[-1], remaining[-2])
    return PairSelection(
        top2=top_pair, high_sim=high_sim, low_sim=low_sim, diagnostics=diagnostics
    )
