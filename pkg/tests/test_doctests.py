import doctest
import importlib

import pytest

MODULES = ["expr", "quadrature", "coeffs", "solver", "comparison", "jacobi", "distributional", "search", "problemfile"]


@pytest.mark.parametrize("name", MODULES)
def test_module_doctests(name):
    module = importlib.import_module(f"sturmcomp.{name}")
    result = doctest.testmod(module, optionflags=doctest.ELLIPSIS)
    assert result.failed == 0
