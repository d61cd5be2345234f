class Param:
    """
    Declared parameter of a configurable component.
    Kernels, diagonals and corpus generators list their tunables in `params`;
    the schema is what `oscdom list` prints and what config overrides are bound to.
    """
    def __init__(self, name, display_name, value=None, info=None, **kwargs):
        self.name = name                  # key in the component config
        self.display_name = display_name
        self.value = value                # default
        self.info = info
        self.kwargs = kwargs              # extra schema fields (min, max, options)

    def coerce(self, raw):
        return raw

    def to_dict(self):
        return {
            "name": self.name,
            "type": self.__class__.__name__.replace("Param", "").lower(),
            "display_name": self.display_name,
            "value": self.value,
            "info": self.info,
            **self.kwargs
        }


class FloatParam(Param):
    def __init__(self, name, display_name, value=0.0, min=None, max=None, info=None):
        super().__init__(name, display_name, value, info, min=min, max=max)

    def coerce(self, raw):
        value = float(raw)
        lo, hi = self.kwargs.get("min"), self.kwargs.get("max")
        if lo is not None and value < lo:
            raise ValueError(f"{self.name}={value} below minimum {lo}")
        if hi is not None and value > hi:
            raise ValueError(f"{self.name}={value} above maximum {hi}")
        return value


class IntParam(FloatParam):
    def coerce(self, raw):
        return int(super().coerce(raw))


class Configurable:
    """
    Base class binding a config dict onto instance attributes.
    Every declared param becomes `self.<name>`, defaulting to the declared value.
    """
    display_name = "Base Component"
    description = ""
    params = []

    def __init__(self, config=None):
        self.config = dict(config or {})
        known = {p.name for p in self.params}
        unknown = set(self.config) - known
        if unknown:
            raise ValueError(f"{type(self).__name__}: unknown parameter(s) {sorted(unknown)}")
        for p in self.params:
            raw = self.config.get(p.name, p.value)
            setattr(self, p.name, p.coerce(raw) if raw is not None else None)

    def settings(self):
        """Effective parameter values, for reports"""
        return {p.name: getattr(self, p.name) for p in self.params}

    @classmethod
    def get_param_schema(cls):
        return [p.to_dict() for p in cls.params]
