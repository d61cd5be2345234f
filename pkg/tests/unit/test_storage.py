import pytest

from oscdom.storage import LocalArtifactStore, MemoryArtifactStore, StorageRegistry


@pytest.fixture(params=["local", "memory"])
def store(request, tmp_path):
    if request.param == "local":
        return LocalArtifactStore(str(tmp_path / "run"))
    return MemoryArtifactStore()


def test_write_and_list(store):
    assert store.list_suites() == []
    store.write_text("prop-cr", "tail.csv", "x,F_Q\n")
    store.write_bytes("kernel-audit", "hilbert.json", b"{}")
    store.write_text("prop-cr", "oscillation.series.csv", "scale\n")
    assert store.list_suites() == ["kernel-audit", "prop-cr"]
    assert store.list_artifacts("prop-cr") == ["oscillation.series.csv", "tail.csv"]
    assert store.list_artifacts("missing") == []
    assert store.read_text("prop-cr", "tail.csv") == "x,F_Q\n"
    assert store.open("kernel-audit", "hilbert.json").read() == b"{}"
    assert store.exists("prop-cr", "tail.csv")
    assert not store.exists("prop-cr", "other.csv")
    assert store.get_size("prop-cr", "tail.csv") == 6


def test_overwrite_replaces_content(store):
    store.write_text("sobolev", "poincare.csv", "old\n")
    store.write_text("sobolev", "poincare.csv", "new\n")
    assert store.read_text("sobolev", "poincare.csv") == "new\n"
    assert store.list_artifacts("sobolev") == ["poincare.csv"]


def test_missing_artifact(store):
    with pytest.raises(FileNotFoundError):
        store.read_bytes("sobolev", "nothing.csv")


@pytest.mark.parametrize("suite, name", [("..", "x"), ("a/b", "x"), ("s", ""), ("s", "../x")])
def test_path_components_are_validated(store, suite, name):
    with pytest.raises(ValueError):
        store.write_text(suite, name, "")


def test_local_store_writes_under_the_root(tmp_path):
    store = LocalArtifactStore("file://" + str(tmp_path))
    store.write_text("sparse-mr", "bounds.csv", "member\n")
    assert (tmp_path / "sparse-mr" / "bounds.csv").read_text() == "member\n"
    assert not list(tmp_path.glob("**/*.part"))


def test_registry_maps_locations(tmp_path):
    registry = StorageRegistry()
    assert isinstance(registry.get_provider("mem://x"), MemoryArtifactStore)
    assert isinstance(registry.get_provider(str(tmp_path)), LocalArtifactStore)
    assert isinstance(registry.get_provider(tmp_path), LocalArtifactStore)
    assert registry.get_provider("file://" + str(tmp_path)).root == tmp_path
