import importlib.util
from pathlib import Path


def test_benchmark_runs(capsys):
    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    assert mod.main(["--train-steps", "80", "--repeat", "5"]) == 0
    out = capsys.readouterr().out
    assert "python" in out and "train()" in out
