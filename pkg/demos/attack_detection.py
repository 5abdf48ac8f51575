"""Multilabel attack categories: knowledge-base training vs a plain net.

Runs the neuro-symbolic classifier and the cross-entropy baseline on the
same synthetic connection records (identical features, seeds, and splits),
then prints the accuracy columns side by side from the comparison file the
second run writes.  Desk-scale sizes keep this quick; raise n and epochs
to approach the full experiment.
"""

from softlogic import experiments as E


def main():
    shared = {"n": "1200", "epochs": "10", "out_dir": "runs/demo_attacks"}
    print("training the knowledge-base classifier...")
    ltn = E.run_experiment(E.resolve("kdd-multilabel-ltn", shared))
    print("training the softmax baseline on the same features...")
    dnn = E.run_experiment(E.resolve("kdd-dnn", shared))

    same = E.read_echo_digest(ltn.echo) == E.read_echo_digest(dnn.echo)
    print(f"feature checksums match: {same}")
    print()
    with open(dnn.extra[0]) as fh:
        rows = [line.strip().split(",") for line in fh if line.strip()]
    header, body = rows[0], rows[1:]
    print("  ".join(f"{h:>14s}" for h in header))
    shown = body if len(body) <= 6 else body[:3] + body[-3:]
    for row in shown:
        print("  ".join(f"{c:>14s}" for c in row))
    print()
    print(f"full table: {dnn.extra[0]}")


if __name__ == "__main__":
    main()
