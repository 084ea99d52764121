import importlib
import inspect

import pytest

MODULES = [
    "forecaster.nn.autodiff", "forecaster.nn.functional", "forecaster.nn.layers", "forecaster.nn.gradcheck",
    "forecaster.nn.positional", "forecaster.scene.normalize", "forecaster.scene.generator",
    "forecaster.scene.features", "forecaster.geometry.coupled_map", "forecaster.encoder.fusion",
    "forecaster.decoder.reference", "forecaster.mtos.losses", "forecaster.eval.metrics",
    "forecaster.eval.bench", "forecaster.eval.robustness", "forecaster.model",
]


def public_functions(module):
    for name, fn in inspect.getmembers(module, inspect.isfunction):
        if not name.startswith("_") and fn.__module__ == module.__name__:
            yield name, fn


@pytest.mark.parametrize("module_name", MODULES)
def test_public_functions_declare_return_types(module_name):
    module = importlib.import_module(module_name)
    missing = [
        name for name, fn in public_functions(module)
        if inspect.signature(fn).return_annotation is inspect.Signature.empty
    ]
    assert not missing, f"{module_name}: {missing}"
