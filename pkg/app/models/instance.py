import os
from typing import Any

from dotenv import load_dotenv
from pydantic import ValidationError

from cascade.state import NetworkState
from grid.network import Network
from schemas.instance import InstanceFile
from utils.data import LINE_KEY, load_yaml, save_yaml, strip_lines
from utils.errors import InstanceParseError
from utils.logs import set_logger

load_dotenv()


logger = set_logger(__name__)



def _line_of(raw: Any, loc: tuple) -> int | None:
    """Source line of the deepest annotated mapping along a pydantic error location."""
    line = raw.get(LINE_KEY) if isinstance(raw, dict) else None
    node = raw
    for key in loc:
        try:
            node = node[key]
        except (KeyError, IndexError, TypeError):
            break
        if isinstance(node, dict) and LINE_KEY in node:
            line = node[LINE_KEY]
    return line


def parse_instance(raw: dict) -> InstanceFile:
    """
    Validate a raw (line-annotated) instance document.

    Raises:
        InstanceParseError: On the first validation error, with its line.
    """
    try:
        return InstanceFile.model_validate(strip_lines(raw))
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(k) for k in first["loc"])
        raise InstanceParseError(f"{where}: {first['msg']}", line=_line_of(raw, first["loc"])) from exc


def emit_instance(instance: InstanceFile) -> dict:
    """Plain document for ``instance``; parsing it back gives an equal instance."""
    data = instance.model_dump(exclude_none=True)
    if not data.get("reference"):
        data.pop("reference", None)
    return data



class InstanceManager:
    def __init__(self,
        name: str,
        version: str = "latest"
    ):
        # Validate version: allow 'latest' or date-like string with two dashes
        if not (version == "latest" or version.count("-") == 2):
            raise ValueError("Version must be 'latest' or in the format 'YYYY-MM-DD'.")

        self.name = name
        self.instance_dir = os.path.join(os.getenv("INSTANCE_PATH", "instances"), name)
        if not os.path.exists(self.instance_dir):
            raise FileNotFoundError(f"Instance directory '{self.instance_dir}' does not exist.")

        self.releases = sorted([
            file_.rsplit(".", 1)[0]
            for file_ in os.listdir(self.instance_dir)
            if file_.lower().endswith('.yaml')
        ])
        if not self.releases:
            raise FileNotFoundError(f"No .yaml instance files found in '{self.instance_dir}'.")

        if version == "latest":
            self.version = self.releases[-1]
        else:
            if version not in self.releases:
                raise ValueError(f"Version '{version}' not in releases: {self.releases}")
            self.version = version

        self.path = os.path.join(self.instance_dir, f"{self.version}.yaml")
        self.instance = parse_instance(load_yaml(self.path, track_lines=True))
        logger.debug(f"Loaded instance {self.name}@{self.version} from {self.path}")

    @classmethod
    def from_file(cls, path: str) -> "InstanceManager":
        """Load an instance file outside the bundled tree."""
        manager = cls.__new__(cls)
        manager.name = os.path.splitext(os.path.basename(path))[0]
        manager.instance_dir = os.path.dirname(path)
        manager.releases = []
        manager.version = "file"
        manager.path = path
        manager.instance = parse_instance(load_yaml(path, track_lines=True))
        return manager

    @staticmethod
    def available() -> dict[str, list[str]]:
        """Bundled instance names and their versions."""
        root = os.getenv("INSTANCE_PATH", "instances")
        if not os.path.isdir(root):
            return {}
        out = {}
        for name in sorted(os.listdir(root)):
            folder = os.path.join(root, name)
            if os.path.isdir(folder):
                out[name] = sorted(f.rsplit(".", 1)[0] for f in os.listdir(folder) if f.lower().endswith(".yaml"))
        return out

    # ---- instance property ----
    @property
    def instance(self) -> InstanceFile:
        return self._instance

    @instance.setter
    def instance(self, value: InstanceFile):
        if not isinstance(value, InstanceFile):
            raise ValueError("Instance must be an InstanceFile.")
        self._instance = value
        self._network = Network.from_instance(value)

    # ---- derived views ----
    @property
    def network(self) -> Network:
        return self._network

    @property
    def state(self) -> NetworkState:
        """Initial state: every link but the outages, injections as given."""
        active = self.network.all_links - set(self.instance.initial_outages)
        return NetworkState.of(active, self.network.vector(self.instance.injections))

    @property
    def reference(self) -> dict:
        return dict(self.instance.reference)

    def emit(self) -> dict:
        return emit_instance(self.instance)

    def save(self, path: str):
        save_yaml(path, self.emit())
        logger.debug(f"Instance {self.name} written to {path}")


def load_instance(instance: str, version: str = "latest") -> InstanceManager:
    """Bundled instance by name, or an instance file by path."""
    if instance.lower().endswith((".yaml", ".yml")) or os.path.isfile(instance):
        return InstanceManager.from_file(instance)
    return InstanceManager(instance, version=version)



__all__ = ['InstanceManager', 'load_instance', 'parse_instance', 'emit_instance']
