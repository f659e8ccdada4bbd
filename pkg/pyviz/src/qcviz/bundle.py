"""Result bundles: parsed qclab JSON documents keyed by subcommand."""

import json
from pathlib import Path

from . import SUPPORTED_SCHEMA


class MissingInput(Exception):
    """Required documents are absent (or carry an unsupported schema)."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("missing or unusable inputs: " + ", ".join(self.missing))


class ResultBundle:
    """Documents from a qclab output directory, schema-version gated."""

    def __init__(self, docs):
        self.docs = dict(docs)

    @classmethod
    def from_dir(cls, path):
        path = Path(path)
        docs = {}
        bad = []
        for f in sorted(path.glob("*.json")):
            try:
                with open(f) as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError):
                bad.append(f"{f.name} (unreadable)")
                continue
            version = doc.get("schema_version")
            if version != SUPPORTED_SCHEMA:
                bad.append(f"{f.name} (schema_version {version!r})")
                continue
            sub = doc.get("subcommand")
            if sub:
                docs[sub] = doc
        if bad:
            raise MissingInput(bad)
        return cls(docs)

    def require(self, *subcommands):
        missing = [s for s in subcommands if s not in self.docs]
        if missing:
            raise MissingInput(missing)
        return [self.docs[s]["results"] for s in subcommands]
