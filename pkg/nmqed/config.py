from __future__ import annotations
import copy
import json
import posixpath
import re
from pathlib import Path
from typing import Any
from importlib.resources import files
from jsonschema import Draft7Validator
from jsonschema.exceptions import ValidationError
from .errors import ConfigError


__all__ = ["ConfigLoader", "available_presets", "preset_path"]


def available_presets() -> list[str]:
    """Return the names of the shipped presets."""
    base = files("nmqed") / "presets"
    return sorted(
        f.name[:-len(".json")] for f in base.iterdir()
        if f.is_file() and f.name.endswith(".json")
    )


def preset_path(name: str):
    """
    Return the resource of the preset ``name``.

    :raises ConfigError: If no such preset is shipped.
    """
    if name not in available_presets():
        raise ConfigError(
            f"Unknown preset '{name}'. Available presets: "
            f"{', '.join(available_presets())}."
        )
    return files("nmqed") / "presets" / f"{name}.json"


class ConfigLoader:
    """
    Load, validate and complete run configurations.

    The loader reads the configuration schema and the reusable
    definitions shipped under ``schemas/``, normalizes every ``$ref`` to
    the identifier of the referenced file and expands it in place. Parsed
    documents are validated against the expanded schema and completed
    with the schema defaults.
    """

    def __init__(self):
        base_dir = files("nmqed") / "schemas"
        schema, definitions = self._load_schemas(base_dir)
        for def_id, definition in definitions.items():
            definitions[def_id] = self._expand_refs(definition, definitions)
        self.schema = self._expand_refs(schema, definitions)
        self.validator = Draft7Validator(self.schema)

    def load(self, path: str | Path) -> dict[str, Any]:
        """
        Read, validate and complete the configuration stored in ``path``.
        A run manifest is accepted as well: the configuration it records
        is used.

        :param path: The configuration file.
        :return: The validated configuration with defaults filled in.
        :raises ConfigError: If the file is not valid JSON or violates the
                             schema.
        :raises OSError: If the file cannot be read.
        """
        path = Path(path)
        return self.parse(path.read_text(encoding="utf-8"), str(path))

    def load_preset(self, name: str) -> dict[str, Any]:
        """Load the shipped preset ``name``."""
        resource = preset_path(name)
        return self.parse(
            resource.read_text(encoding="utf-8"), f"preset:{name}"
        )

    def parse(self, text: str, source: str = "<config>") -> dict[str, Any]:
        """
        Validate and complete the configuration contained in ``text``.

        :param text: JSON text.
        :param source: Name used in error messages.
        :return: The completed configuration.
        :raises ConfigError: On syntax errors or schema violations, with
                             the line of the offending entry.
        """
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}"
            ) from exc
        if isinstance(document, dict) and self._is_manifest(document):
            document = document["config"]
            text = json.dumps(document, indent=2)
            source = f"{source} (recorded configuration)"
        errors = sorted(
            self.validator.iter_errors(document),
            key=lambda e: [str(p) for p in e.absolute_path]
        )
        if errors:
            raise ConfigError(
                "\n".join(self._describe(e, text, source) for e in errors)
            )
        return self.complete(document)

    def complete(self, document: dict[str, Any]) -> dict[str, Any]:
        """
        Return a copy of ``document`` with the schema defaults filled in.

        Defaults are applied to the properties of the objects present in
        the document, and to the objects listed in the schema
        ``initialize`` array. Array items (runs) are left untouched, so
        they keep overriding only what they name.
        """
        return self._fill_defaults(self.schema, copy.deepcopy(document))

    def _fill_defaults(
        self,
        schema: dict[str, Any],
        value: dict[str, Any]
    ) -> dict[str, Any]:
        properties = schema.get("properties", {})
        initialize = set(schema.get("initialize", []))
        for key, prop_schema in properties.items():
            if key not in value:
                if "default" in prop_schema:
                    value[key] = copy.deepcopy(prop_schema["default"])
                elif key in initialize and \
                        prop_schema.get("type") == "object":
                    value[key] = {}
            if isinstance(value.get(key), dict) and \
                    prop_schema.get("type") == "object":
                self._fill_defaults(prop_schema, value[key])
        return value

    @staticmethod
    def _is_manifest(document: dict[str, Any]) -> bool:
        return {"config", "runs", "versions"} <= set(document) \
            and isinstance(document["config"], dict)

    def _describe(
        self,
        error: ValidationError,
        text: str,
        source: str
    ) -> str:
        path = list(error.absolute_path)
        location = "/".join(str(p) for p in path) or "<root>"
        line = _locate(text, path)
        return f"{source}:{line}: {location}: {error.message}"

    def _load_schemas(
        self,
        base_dir
    ) -> tuple[dict[str, Any], dict[str, dict]]:
        """
        Load the configuration schema and the definition files.

        :param base_dir: Directory containing the schema tree.
        :return: The schema and a mapping from definition ids to schemas.
        """
        definitions: dict[str, dict] = {}
        definitions_dir = base_dir / "definitions"
        for f in definitions_dir.iterdir():
            if f.is_file() and f.name.endswith(".json"):
                rel_path = f"definitions/{f.name}"
                schema = json.loads(f.read_text(encoding="utf-8"))
                self._absolutize_refs(schema, rel_path)
                definitions[schema.get("$id", rel_path)] = schema
        schema = json.loads(
            (base_dir / "config.json").read_text(encoding="utf-8")
        )
        self._absolutize_refs(schema, "config.json")
        return schema, definitions

    def _absolutize_refs(
        self,
        schema: dict[str, Any],
        current_file: str
    ) -> dict[str, Any]:
        """
        Rewrite all ``$ref`` values in a schema, in place, to paths
        relative to the schema root.

        :param schema: Schema whose references will be rewritten.
        :param current_file: Path of the schema file, relative to the root.
        :return: The same schema.
        """
        def recurse(obj: Any):
            if isinstance(obj, dict):
                if "$ref" in obj:
                    obj["$ref"] = self._normalize_ref(obj["$ref"], current_file)
                for v in obj.values():
                    recurse(v)
            elif isinstance(obj, list):
                for item in obj:
                    recurse(item)
        recurse(schema)
        return schema

    @staticmethod
    def _normalize_ref(ref: str, current_file: str) -> str:
        """
        Resolve ``ref`` against the directory of ``current_file``; pure
        fragments are anchored to ``current_file`` itself.
        """
        if ref.startswith("#"):
            return f"{current_file}{ref}"
        ref_path, _, fragment = ref.partition("#")
        result = posixpath.normpath(
            posixpath.join(posixpath.dirname(current_file), ref_path)
        )
        return f"{result}#{fragment}" if fragment else result

    def _expand_refs(
        self,
        schema: dict[str, Any],
        definitions: dict[str, Any]
    ) -> dict[str, Any]:
        """
        Recursively replace every ``$ref`` with the referenced definition,
        merged with the keys written next to the reference.

        :raises ValueError: If a ``$ref`` cannot be resolved.
        """
        def recurse(obj: Any):
            if isinstance(obj, dict):
                if "$ref" in obj:
                    ref = obj["$ref"]
                    resolved = definitions.get(ref)
                    if resolved is None:
                        raise ValueError(f"Unresolved $ref: {ref}")
                    merged = {
                        **resolved,
                        **{k: v for k, v in obj.items() if k != "$ref"}
                    }
                    merged.pop("$id", None)
                    merged.pop("$schema", None)
                    return recurse(merged)
                return {k: recurse(v) for k, v in obj.items()}
            if isinstance(obj, list):
                return [recurse(item) for item in obj]
            return obj
        return recurse(schema)


def _locate(text: str, path: list) -> int:
    """
    Return the 1-based line where the entry at ``path`` starts in the JSON
    ``text``, or the line of its closest enclosing entry.
    """
    position = 0
    for key in path:
        if isinstance(key, int):
            found = _element_start(text, position, key)
        else:
            match = re.compile(rf'"{re.escape(key)}"\s*:').search(
                text, position
            )
            found = match.start() if match else None
        if found is None:
            break
        position = found
    return text.count("\n", 0, position) + 1


def _element_start(text: str, position: int, index: int) -> int | None:
    start = text.find("[", position)
    if start < 0:
        return None
    depth = 0
    count = 0
    in_string = False
    escaped = False
    i = start + 1
    while i < len(text):
        c = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif c == "\\":
                escaped = True
            elif c == '"':
                in_string = False
        elif c == '"':
            in_string = True
        elif c in "[{":
            depth += 1
        elif c in "]}":
            if depth == 0:
                return None
            depth -= 1
        elif c == "," and depth == 0:
            count += 1
            if count == index:
                i += 1
                break
        i += 1
    if index == 0:
        i = start + 1
    while i < len(text) and text[i].isspace():
        i += 1
    return i
