import os
import random
import subprocess
import sys

import numpy as np
import pytest

from oracles import ALPHABET, random_state_machine

from convmine import _kernel
from convmine.conformance import CostFunction, _compile
from convmine.model import ModelError, builtin_qrfa, from_definition


def test_python_backend_always_available():
    assert "python" in _kernel.BACKENDS
    with pytest.raises(ValueError):
        _kernel.get("fortran")


@pytest.mark.skipif("cython" not in _kernel.BACKENDS, reason="extension not built")
def test_backends_agree():
    rng = random.Random(11)
    nets = [from_definition(builtin_qrfa())]
    while len(nets) < 10:
        net = random_state_machine(rng)
        try:
            _compile(net, CostFunction())
        except ModelError:
            continue
        nets.append(net)
    for net in nets:
        for cost in (CostFunction(), CostFunction(2.0, 0.5)):
            c = _compile(net, cost)
            variants = [
                [rng.choice(ALPHABET + ("X",)) for _ in range(rng.randint(0, 15))]
                for _ in range(200)
            ]
            a = c.batch(variants, "cython")
            b = c.batch(variants, "python")
            assert np.array_equal(a, b)


def test_pure_env_forces_python():
    code = "import convmine; print(convmine.BACKEND)"
    env = dict(os.environ, CONVMINE_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
