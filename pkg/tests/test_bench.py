import os
import sys

import pytest

from polykex._backend import compiled

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "benchmarks"))


@pytest.mark.skipif(compiled is None, reason="compiled kernels not built")
def test_benchmark_smoke(capsys):
    import bench_backends

    assert bench_backends.main(["--repeat", "1", "--attempts", "1", "--json"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert len(rows) == 10
