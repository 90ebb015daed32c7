"""Registry of specialist denoisers keyed by distortion type.

Each restoration request is routed to the specialist whose tag matches the
request's distortion type; a wildcard model (tag ``*``) may stand in for
any type. Registration only reads the checkpoint header; full parameter
loading happens lazily on first use and exactly once, even under
concurrent callers.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from .degrade import DistortionSpec, DistortionType
from .denoiser import DenoiserModel, forward, load_model, read_model_info
from .errors import NoSpecialistError, TagMismatchError
from .image import Image

REGISTRY_NAME = "registry.json"


class DenoiserRegistry:
    """At most one specialist checkpoint per distortion type."""

    def __init__(self):
        self._paths: dict[DistortionType, Path] = {}
        self._models: dict[DistortionType, DenoiserModel] = {}
        self._lock = threading.Lock()

    def register(self, dtype: DistortionType, checkpoint_path: str | Path) -> None:
        """Attach a checkpoint to a type; replaces any previous entry.

        Validates the checkpoint's specialization tag against ``dtype``
        from the header alone, so registration stays cheap.
        """
        path = Path(checkpoint_path)
        info = read_model_info(path)
        tag = info.get("dtype")
        if tag != "*" and tag != dtype.name.lower():
            raise TagMismatchError(
                f"checkpoint {path} is tagged {tag!r}, not {dtype.name.lower()!r}"
            )
        with self._lock:
            self._paths[dtype] = path
            self._models.pop(dtype, None)

    def deregister(self, dtype: DistortionType) -> None:
        with self._lock:
            self._paths.pop(dtype, None)
            self._models.pop(dtype, None)

    @property
    def types(self) -> list[DistortionType]:
        return sorted(self._paths)

    def checkpoint_path(self, dtype: DistortionType) -> Path:
        return self._paths[dtype]

    def model_for(self, dtype: DistortionType) -> DenoiserModel:
        """Lazily load (once) and return the specialist for ``dtype``."""
        model = self._models.get(dtype)
        if model is not None:
            return model
        with self._lock:
            model = self._models.get(dtype)
            if model is not None:
                return model
            path = self._paths.get(dtype)
            if path is None:
                raise NoSpecialistError(dtype)
            model = load_model(path)
            if model.dtype is not None and model.dtype != dtype:
                raise TagMismatchError(
                    f"checkpoint {path} is tagged {model.dtype.name.lower()!r}, "
                    f"not {dtype.name.lower()!r}"
                )
            self._models[dtype] = model
            return model

    def restore(self, img: Image, spec: DistortionSpec) -> Image:
        """Route to the matching specialist with the spec's severity level."""
        if spec.dtype not in self._paths:
            raise NoSpecialistError(spec.dtype)
        model = self.model_for(spec.dtype)
        return forward(model, img, spec.normalized_level)

    def restore_chain(self, img: Image, specs: list[DistortionSpec]) -> Image:
        """Undo a stack of corruptions, most recent first.

        ``specs`` lists corruptions in the order they were applied; the
        matching specialists run in reverse. An empty chain returns the
        input unchanged.
        """
        for spec in reversed(specs):
            if spec.dtype not in self._paths:
                raise NoSpecialistError(spec.dtype)
        for spec in reversed(specs):
            img = self.restore(img, spec)
        return img

    def save(self, path: str | Path) -> None:
        """Write the type-to-checkpoint map as JSON."""
        obj = {t.name.lower(): str(p) for t, p in sorted(self._paths.items())}
        Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DenoiserRegistry":
        """Read a registry file; relative checkpoint paths resolve beside it."""
        path = Path(path)
        obj = json.loads(path.read_text(encoding="utf-8"))
        registry = cls()
        for name, ckpt in obj.items():
            ckpt_path = Path(ckpt)
            if not ckpt_path.is_absolute():
                ckpt_path = path.parent / ckpt_path
            registry.register(DistortionType.from_name(name), ckpt_path)
        return registry
