"""Run the synthetic benchmarks over several seeds and summarize them."""

import argparse
import statistics
import subprocess
import sys
import time
from datetime import datetime
from pathlib import Path

from order_ltr.storage import read_table

MEAN_COLUMNS = ("listmle_mean", "weighted_listmle_mean", "payoff_gain_mean")


class BenchmarkRunner:
    def __init__(self, command: str, seeds: list[int], parallel: int, out_dir: Path, config: Path | None):
        self.command = command
        self.seeds = seeds
        self.parallel = parallel
        self.out_dir = out_dir
        self.config = config
        self.failed: dict[int, str] = {}

    def output_for(self, seed: int) -> Path:
        return self.out_dir / f"{self.command}-seed{seed}.csv"

    def launch(self, seed: int) -> subprocess.Popen:
        argv = [sys.executable, "-m", "order_ltr", "--log-level", "WARNING", self.command]
        argv += ["--seed", str(seed), "--out", str(self.output_for(seed))]
        if self.config is not None:
            argv += ["--config", str(self.config)]
        return subprocess.Popen(argv, stdout=subprocess.DEVNULL, stderr=subprocess.PIPE)

    def run_seeds(self):
        """Run one CLI process per seed, at most ``parallel`` at a time."""
        print(f"\n==> Running {len(self.seeds)} seeds ({self.parallel} in parallel)...")
        pending = list(self.seeds)
        running: dict[int, subprocess.Popen] = {}
        done = 0
        while pending or running:
            while pending and len(running) < self.parallel:
                seed = pending.pop(0)
                running[seed] = self.launch(seed)
            for seed, proc in list(running.items()):
                if proc.poll() is None:
                    continue
                del running[seed]
                done += 1
                if proc.returncode != 0:
                    self.failed[seed] = proc.stderr.read().decode()[-400:]
                    print(f"    Seed {seed} failed with exit code {proc.returncode}")
                else:
                    print(f"    Progress: {done}/{len(self.seeds)} seeds finished")
            time.sleep(0.2)

    def summarize_benchmark(self):
        by_gain: dict[str, dict[str, list[float]]] = {}
        for seed in self.seeds:
            if seed in self.failed:
                continue
            for row in read_table(self.output_for(seed)):
                columns = by_gain.setdefault(row["gain_vector"], {c: [] for c in MEAN_COLUMNS})
                for column in MEAN_COLUMNS:
                    columns[column].append(float(row[column]))

        for gain, columns in by_gain.items():
            print(f"\nGain vector [{gain}]:")
            for column, values in columns.items():
                spread = statistics.stdev(values) if len(values) > 1 else 0.0
                print(f"  {column:<24} {statistics.mean(values):.6f} ± {spread:.6f}")
            wins = sum(
                payoff_gain > weighted > plain
                for plain, weighted, payoff_gain in zip(*(columns[c] for c in MEAN_COLUMNS), strict=True)
            )
            print(f"  payoff-gain > weighted > listmle on {wins}/{len(columns[MEAN_COLUMNS[0]])} seeds")

    def summarize_dwell(self):
        by_model: dict[str, dict[str, list[float]]] = {}
        for seed in self.seeds:
            if seed in self.failed:
                continue
            for row in read_table(self.output_for(seed)):
                metrics = by_model.setdefault(row["model_name"], {"avg_ndcg": [], "top1_avg_score": []})
                metrics["avg_ndcg"].append(float(row["avg_ndcg"]))
                metrics["top1_avg_score"].append(float(row["top1_avg_score"]))

        print(f"\n  {'model':<20} {'avg NDCG':>10} {'top-1 score':>12}")
        for name, metrics in by_model.items():
            print(
                f"  {name:<20} {statistics.mean(metrics['avg_ndcg']):>10.4f}"
                f" {statistics.mean(metrics['top1_avg_score']):>12.2f}"
            )

    def run(self):
        print("=" * 60)
        print(f"ORDER-LTR {self.command.upper()} OVER SEEDS")
        print("=" * 60)
        print(f"Time: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
        self.out_dir.mkdir(parents=True, exist_ok=True)

        start = time.perf_counter()
        self.run_seeds()
        elapsed = time.perf_counter() - start

        print("\n" + "=" * 60)
        print("RESULTS")
        print("=" * 60)
        print(f"  Seeds:      {len(self.seeds) - len(self.failed)}/{len(self.seeds)} succeeded")
        print(f"  Total time: {elapsed:.1f}s")
        if len(self.failed) == len(self.seeds):
            for seed, stderr in self.failed.items():
                print(f"  Seed {seed}: {stderr}")
            return 1
        if self.command == "benchmark":
            self.summarize_benchmark()
        else:
            self.summarize_dwell()
        print("=" * 60)
        return 0


def main() -> int:
    parser = argparse.ArgumentParser(description="Repeat the order-ltr benchmarks over seeds")
    parser.add_argument("command", choices=("benchmark", "dwell-benchmark"), nargs="?", default="benchmark")
    parser.add_argument("--seeds", type=int, default=5, help="Number of seeds, starting at --first-seed")
    parser.add_argument("--first-seed", type=int, default=0)
    parser.add_argument("--parallel", type=int, default=4, help="Seeds run at the same time")
    parser.add_argument("--config", type=Path, help="JSON config passed to every run")
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    args = parser.parse_args()

    runner = BenchmarkRunner(
        command=args.command,
        seeds=list(range(args.first_seed, args.first_seed + args.seeds)),
        parallel=args.parallel,
        out_dir=args.out_dir,
        config=args.config,
    )
    return runner.run()


if __name__ == "__main__":
    sys.exit(main())
