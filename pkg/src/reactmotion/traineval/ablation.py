"""Train several configurations on one split and tabulate their metrics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .config import LOSS_SUBSETS, TrainConfig
from .metrics import afd_report, synthesize_clips
from .recognition import recognition_accuracy
from .train import train_gan

# generator variants, from the plain seq2seq up to the full model
GENERATOR_VARIANTS = {
    "seq2seq": {"use_parts": False, "use_attention": False},
    "seq2seq-part": {"use_parts": True, "use_attention": False},
    "seq2seq-part-attentive": {"use_parts": True, "use_attention": True},
}

LOSS_VARIANTS = {subset: {"loss_subset": subset} for subset in LOSS_SUBSETS}


def generator_variants(base: TrainConfig) -> list[tuple[str, TrainConfig]]:
    return [(name, base.updated(**flags)) for name, flags in GENERATOR_VARIANTS.items()]


def loss_variants(base: TrainConfig) -> list[tuple[str, TrainConfig]]:
    return [(name, base.updated(**flags)) for name, flags in LOSS_VARIANTS.items()]


@dataclass
class AblationRow:
    variant: str
    config_hash: str
    afd_mean: float
    afd_per_class: dict[int, float]
    accuracy: float | None = None
    accuracy_per_class: dict[int, float] = field(default_factory=dict)


@dataclass
class AblationReport:
    rows: list[AblationRow]

    def row(self, variant: str) -> AblationRow:
        for r in self.rows:
            if r.variant == variant:
                return r
        raise KeyError(variant)

    def to_csv(self) -> str:
        classes = sorted({c for r in self.rows for c in r.afd_per_class})
        header = ["variant", "config_hash", "afd_mean"] + [f"afd_class{c}" for c in classes]
        with_acc = any(r.accuracy is not None for r in self.rows)
        if with_acc:
            header += ["accuracy"] + [f"accuracy_class{c}" for c in classes]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for r in self.rows:
            line = [r.variant, r.config_hash, repr(r.afd_mean)]
            line += [repr(r.afd_per_class[c]) if c in r.afd_per_class else "" for c in classes]
            if with_acc:
                line += ["" if r.accuracy is None else repr(r.accuracy)]
                line += [repr(r.accuracy_per_class[c]) if c in r.accuracy_per_class else "" for c in classes]
            writer.writerow(line)
        return buf.getvalue()


def run_ablation(train_clips, test_clips, variants, recognizer=None, per_joint: bool = False,
                 jobs: int = 1, progress=None) -> AblationReport:
    """Train each ``(name, TrainConfig)`` on ``train_clips`` and score it on ``test_clips``.

    AFD is always reported; recognition accuracy (real A + synthesized B)
    only when a trained ``recognizer`` is given.  Each variant carries its
    own seed, so variants that share a config produce identical rows.
    """
    variants = list(variants)
    if not variants:
        raise ValueError("no variants to compare")
    test_clips = list(test_clips)
    rows = []
    for name, config in variants:
        if progress is not None:
            progress(name, config)
        result = train_gan(train_clips, config)
        preds = synthesize_clips(result.generator, test_clips)
        report = afd_report(preds, test_clips, per_joint=per_joint, jobs=jobs)
        row = AblationRow(name, config.hash(), report.mean, report.per_class())
        if recognizer is not None:
            synthesized = [c.with_motion_b(p) for c, p in zip(test_clips, preds)]
            acc = recognition_accuracy(recognizer, synthesized)
            row.accuracy, row.accuracy_per_class = acc.overall, acc.per_class
        rows.append(row)
    return AblationReport(rows)
