"""
Operator and corpus registries.

Operator labels:
    hilbert | riesz1 | riesz2 | control:signflip | zero      kernel operators
    diag:one | diag:zero | diag:log | diag:const:<c>         multiplication operators
    sum:<a>+<b>                                              T_a + T_b (split at the first '+')
    plugin:<module>_<class>                                  kernels found in the plugin directory
"""
import importlib.util
import inspect
import logging
import os

from oscdom.builtin.control import SignFlipKernel, ZeroKernel
from oscdom.builtin.corpus import (
    DEFAULT_CORPUS,
    BumpGenerator,
    CorpusGenerator,
    IndicatorGenerator,
    PiecewiseGenerator,
    PlateauGenerator,
    SmoothedIndicatorGenerator,
    TrigGenerator,
    ZeroGenerator,
)
from oscdom.builtin.diagonal import ConstantDiagonal, LogDiagonal
from oscdom.builtin.hilbert import HilbertKernel
from oscdom.builtin.riesz import Riesz1Kernel, Riesz2Kernel
from oscdom.core import KernelSpec, OperatorSpec
from oscdom.errors import ConfigError

logger = logging.getLogger(__name__)

PLUGIN_PREFIX = "plugin:"


class OperatorRegistry:
    """
    Kernel, diagonal and corpus-generator registry.
    Built-ins are registered at construction; `discover_plugins` adds the
    KernelSpec / CorpusGenerator subclasses found in `plugin_dir`.
    """
    def __init__(self, plugin_dir=None):
        self.builtin_kernels = {}     # label -> class
        self.plugin_kernels = {}
        self.diagonals = {}           # name -> factory(arg)
        self.builtin_generators = {}  # key -> class
        self.plugin_generators = {}
        self.plugin_dir = plugin_dir

        self.register_builtin("hilbert", HilbertKernel)
        self.register_builtin("riesz1", Riesz1Kernel)
        self.register_builtin("riesz2", Riesz2Kernel)
        self.register_builtin("control:signflip", SignFlipKernel)
        self.register_builtin("zero", ZeroKernel)

        self.diagonals["one"] = lambda: ConstantDiagonal({"value": 1.0})
        self.diagonals["zero"] = lambda: ConstantDiagonal({"value": 0.0})
        self.diagonals["log"] = lambda: LogDiagonal()

        self.register_generator("plateau", PlateauGenerator)
        self.register_generator("bump", BumpGenerator)
        self.register_generator("trig", TrigGenerator)
        self.register_generator("piecewise", PiecewiseGenerator)
        self.register_generator("indicator", IndicatorGenerator)
        self.register_generator("smooth-indicator", SmoothedIndicatorGenerator)
        self.register_generator("zero", ZeroGenerator)

    def register_builtin(self, label, cls):
        self.builtin_kernels[label] = cls

    def register_generator(self, key, cls):
        self.builtin_generators[key] = cls

    def discover_plugins(self):
        """Import every public .py file of the plugin directory and collect its components"""
        if not self.plugin_dir or not os.path.isdir(self.plugin_dir):
            return

        self.plugin_kernels.clear()
        self.plugin_generators.clear()

        for filename in sorted(os.listdir(self.plugin_dir)):
            if not filename.endswith(".py") or filename.startswith("_"):
                continue
            path = os.path.join(self.plugin_dir, filename)
            name = filename[:-3]
            try:
                spec = importlib.util.spec_from_file_location(f"oscdom_plugin_{name}", path)
                module = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(module)
            except Exception as e:
                logger.warning("[Registry] Error loading plugin %s: %s", filename, e)
                continue

            for attr_name, attr in inspect.getmembers(module, inspect.isclass):
                if attr.__module__ != module.__name__:
                    continue
                label = f"{PLUGIN_PREFIX}{name}_{attr_name}"
                if issubclass(attr, KernelSpec) and attr is not KernelSpec:
                    self.plugin_kernels[label] = attr
                    logger.info("[Registry] Found kernel plugin: %s", label)
                elif issubclass(attr, CorpusGenerator) and attr is not CorpusGenerator:
                    self.plugin_generators[label] = attr
                    logger.info("[Registry] Found corpus plugin: %s", label)

    # ------------------------------------------------------------------
    # operators
    # ------------------------------------------------------------------

    def kernel_class(self, label):
        return self.builtin_kernels.get(label) or self.plugin_kernels.get(label)

    def create_kernel(self, label, config=None):
        cls = self.kernel_class(label)
        if cls is None:
            raise ConfigError("operator", f"unknown kernel '{label}'")
        try:
            return cls(config)
        except ValueError as e:
            raise ConfigError("operator", str(e)) from None

    def create_diagonal(self, name):
        if name.startswith("const:"):
            raw = name.split(":", 1)[1]
            try:
                return ConstantDiagonal({"value": float(raw)})
            except ValueError:
                raise ConfigError("operator", f"bad constant diagonal '{raw}'") from None
        factory = self.diagonals.get(name)
        if factory is None:
            raise ConfigError("operator", f"unknown diagonal 'diag:{name}'")
        return factory()

    def resolve(self, label):
        """Operator label -> OperatorSpec"""
        label = label.strip()
        if label.startswith("sum:"):
            body = label[len("sum:"):]
            if "+" not in body:
                raise ConfigError("operator", f"'{label}' needs two summands")
            first, second = body.split("+", 1)
            return self.resolve(first) + self.resolve(second)
        if label.startswith("diag:"):
            return OperatorSpec(diagonal=self.create_diagonal(label[len("diag:"):]), label=label)
        return OperatorSpec(kernel=self.create_kernel(label), label=label)

    # ------------------------------------------------------------------
    # corpus
    # ------------------------------------------------------------------

    def generator_class(self, key):
        return self.builtin_generators.get(key) or self.plugin_generators.get(key)

    def create_generator(self, key, params=None):
        cls = self.generator_class(key)
        if cls is None:
            raise ConfigError("corpus", f"unknown generator '{key}'")
        try:
            return cls(params)
        except ValueError as e:
            raise ConfigError("corpus", str(e)) from None

    def build_corpus(self, cfg):
        """
        [(name, generator)] for the experiment. `corpus` is "default" (the
        12 shipped members), a single generator key, or an explicit list.
        """
        selector = cfg.corpus
        if selector == "default":
            members = DEFAULT_CORPUS
        elif isinstance(selector, str):
            members = ((selector, selector, {}),)
        else:
            members = tuple((m.name, m.generator, m.params) for m in selector)
        corpus = [(name, self.create_generator(key, params)) for name, key, params in members]
        names = [name for name, _ in corpus]
        if len(set(names)) != len(names):
            raise ConfigError("corpus", "member names must be unique")
        return corpus

    # ------------------------------------------------------------------
    # listing
    # ------------------------------------------------------------------

    def _component_info(self, label, cls, is_builtin):
        return {
            "label": label,
            "display_name": cls.display_name,
            "description": cls.description or (inspect.getdoc(cls) or "").split("\n")[0],
            "params": cls.get_param_schema(),
            "is_builtin": is_builtin,
        }

    def describe(self):
        """Every registered component with its parameter schema"""
        return {
            "kernels": [self._component_info(k, c, True) for k, c in self.builtin_kernels.items()]
            + [self._component_info(k, c, False) for k, c in self.plugin_kernels.items()],
            "diagonals": [f"diag:{name}" for name in self.diagonals] + ["diag:const:<c>"],
            "generators": [self._component_info(k, c, True) for k, c in self.builtin_generators.items()]
            + [self._component_info(k, c, False) for k, c in self.plugin_generators.items()],
        }
