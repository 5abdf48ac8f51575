"""Single-label traffic classification driven purely by membership axioms.

The knowledge base only says "benign rows are benign, ddos rows are ddos,
portscan rows are portscan"; the softmax output layer supplies the fact
that the three labels exclude each other.  Satisfiability and accuracy
climb together because the axioms are the training signal.
"""

from softlogic import experiments as E
from softlogic import metrics as M


def main():
    cfg = E.resolve("cic-singlelabel", {"out_dir": "runs/demo_traffic"})
    print(f"training on {cfg.n} synthetic flows for {cfg.epochs} epochs...")
    art = E.run_experiment(cfg)
    records, _ = M.read_metrics_csv(art.metrics[0])

    print()
    print("epoch  sat_train  acc_test")
    for r in records:
        bar = "#" * int(round(30 * r.sat_train))
        print(f"{r.epoch:5d}  {r.sat_train:9.3f}  {r.acc_test:8.3f}  {bar}")
    print()
    print(f"artifacts in {art.out_dir}")


if __name__ == "__main__":
    main()
