import io
import os
from abc import ABC, abstractmethod
from pathlib import Path


class BaseArtifactStore(ABC):
    """
    Artifact store.
    Artifacts are addressed by (suite, name); a run directory holds one
    sub-directory per suite.
    """
    scheme = "file"

    @abstractmethod
    def write_bytes(self, suite: str, name: str, data: bytes):
        pass

    @abstractmethod
    def read_bytes(self, suite: str, name: str) -> bytes:
        pass

    @abstractmethod
    def list_suites(self) -> list:
        pass

    @abstractmethod
    def list_artifacts(self, suite: str) -> list:
        pass

    def write_text(self, suite, name, text):
        self.write_bytes(suite, name, text.encode("utf-8"))

    def read_text(self, suite, name):
        return self.read_bytes(suite, name).decode("utf-8")

    def open(self, suite, name):
        return io.BytesIO(self.read_bytes(suite, name))

    def exists(self, suite, name):
        return name in self.list_artifacts(suite)

    def get_size(self, suite, name):
        return len(self.read_bytes(suite, name))


def _check_name(part):
    if not part or part in (".", "..") or "/" in part or "\\" in part:
        raise ValueError(f"invalid artifact path component {part!r}")
    return part


class LocalArtifactStore(BaseArtifactStore):
    """Run directory on disk (default)"""
    scheme = "file"

    def __init__(self, root):
        self.root = Path(root[7:] if str(root).startswith("file://") else root)

    def _path(self, suite, name=None):
        path = self.root / _check_name(suite)
        return path if name is None else path / _check_name(name)

    def write_bytes(self, suite, name, data):
        path = self._path(suite, name)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".part")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def read_bytes(self, suite, name):
        path = self._path(suite, name)
        if not path.is_file():
            raise FileNotFoundError(f"{suite}/{name}")
        return path.read_bytes()

    def list_suites(self):
        if not self.root.is_dir():
            return []
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    def list_artifacts(self, suite):
        path = self._path(suite)
        if not path.is_dir():
            return []
        return sorted(p.name for p in path.iterdir() if p.is_file() and not p.name.endswith(".part"))

    def get_size(self, suite, name):
        return self._path(suite, name).stat().st_size


class MemoryArtifactStore(BaseArtifactStore):
    """In-memory store (tests and dry runs)"""
    scheme = "mem"

    def __init__(self, root=None):
        self._data = {}

    def write_bytes(self, suite, name, data):
        self._data[(_check_name(suite), _check_name(name))] = bytes(data)

    def read_bytes(self, suite, name):
        try:
            return self._data[(suite, name)]
        except KeyError:
            raise FileNotFoundError(f"{suite}/{name}") from None

    def list_suites(self):
        return sorted({s for s, _ in self._data})

    def list_artifacts(self, suite):
        return sorted(n for s, n in self._data if s == suite)


class StorageRegistry:
    """Maps an output location (`mem://...` or a path) to a store"""
    def __init__(self):
        self._providers = {}
        self.register(LocalArtifactStore)
        self.register(MemoryArtifactStore)

    def register(self, provider_cls):
        self._providers[provider_cls.scheme] = provider_cls

    def get_provider(self, uri) -> BaseArtifactStore:
        uri = str(uri)
        if "://" in uri:
            scheme = uri.split("://", 1)[0]
            return self._providers.get(scheme, self._providers["file"])(uri)
        return self._providers["file"](uri)
