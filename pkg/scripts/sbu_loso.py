"""Leave-one-subject-out training and AFD evaluation on SBU Kinect Interaction.

    python3 scripts/sbu_loso.py --root /data/sbu --out runs/sbu

The root is laid out as ``category/pair/take`` (see ``load_sbu_directory``);
``REACTMOTION_DATA`` is used when ``--root`` is omitted.  Each fold trains
with the SBU preset on every clip not involving the held-out subject and
reports per-class AFD on the clips that do.  Folds are appended to
``afd_folds.csv`` in the output directory.  This is a long run.
"""

import argparse
import csv
import os
import time
from pathlib import Path

from reactmotion.motiondata import load_sbu_directory, split_loso, subjects_of
from reactmotion.traineval import TrainConfig, afd_report, save_models, synthesize_clips, train_gan


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--root", default=os.environ.get("REACTMOTION_DATA"))
    ap.add_argument("--out", required=True)
    ap.add_argument("--epochs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--subjects", nargs="*", help="folds to run (default: all)")
    args = ap.parse_args()
    if not args.root:
        ap.error("give --root or set REACTMOTION_DATA")

    clips = load_sbu_directory(args.root)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = TrainConfig.preset("sbu", epochs=args.epochs, seed=args.seed)
    folds = args.subjects or subjects_of(clips)
    print(f"{len(clips)} windows, folds {folds}", flush=True)

    table = out / "afd_folds.csv"
    new = not table.exists()
    with open(table, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(["held_out", "class", "afd", "n_test", "config_hash"])
        for subject in folds:
            train, test = split_loso(clips, subject)
            t0 = time.perf_counter()
            result = train_gan(train, cfg)
            save_models(out / subject, result, cfg)
            report = afd_report(synthesize_clips(result.generator, test), test)
            for label, value in report.per_class().items():
                writer.writerow([subject, label, repr(value), len(test), cfg.hash()])
            fh.flush()
            print(f"{subject}: mean AFD {report.mean:.4f} over {len(test)} windows "
                  f"({time.perf_counter() - t0:.0f} s)", flush=True)


if __name__ == "__main__":
    main()
