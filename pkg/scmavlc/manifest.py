"""Run manifests written next to every CLI output."""
import datetime
import hashlib
import json

from . import __version__

SUFFIX = ".manifest.json"


def file_digest(path):
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


class RunManifest:
    """Everything needed to reproduce one command.

    Timestamps are the only fields excluded from :meth:`same_run`.
    """

    def __init__(self, command, config, seeds=(), inputs=(), version=__version__):
        self.command = command
        self.config = dict(config)
        self.seeds = list(seeds)
        self.version = version
        self.input_digests = {str(path): file_digest(path) for path in inputs}
        self.started = _now()
        self.finished = None

    def finish(self):
        self.finished = _now()
        return self

    def as_dict(self):
        return {
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "version": self.version,
            "input_digests": self.input_digests,
            "started": self.started,
            "finished": self.finished,
        }

    def same_run(self, other):
        mine, theirs = self.as_dict(), other.as_dict()
        for key in ("started", "finished"):
            mine.pop(key)
            theirs.pop(key)
        return mine == theirs

    def write(self, output_path):
        """Write ``<output_path>.manifest.json`` and return its path."""
        path = str(output_path) + SUFFIX
        with open(path, "w") as f:
            json.dump(self.as_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    @classmethod
    def read(cls, path):
        with open(path) as f:
            values = json.load(f)
        manifest = cls.__new__(cls)
        for key, value in values.items():
            setattr(manifest, key, value)
        return manifest
