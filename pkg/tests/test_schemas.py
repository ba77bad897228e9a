import unittest
import json
from pathlib import Path
from importlib.resources import files
from referencing import Registry
from referencing.jsonschema import DRAFT7
from referencing.exceptions import Unresolvable
from jsonschema import Draft7Validator
from jsonschema.exceptions import SchemaError, ValidationError


class TestSchemas(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.base = files("nmqed") / "schemas"
        cls.metaschema = Draft7Validator.META_SCHEMA

        schemas = [s.relative_to(cls.base) for s in cls.base.rglob("*.json")]
        resources = {}
        for schema in schemas:
            content = \
                json.loads(Path(cls.base / schema).read_text(encoding="utf-8"))
            resources[schema.as_posix()] = DRAFT7.create_resource(content)

        registry = Registry().with_resources(resources.items())
        registry = registry.with_resource(
            cls.metaschema["$id"],
            DRAFT7.create_resource(cls.metaschema)
        )

        cls.schemas = schemas
        cls.resources = resources
        cls.registry = registry

    def _validator(self, name: str) -> Draft7Validator:
        schema = self.resources[name].contents
        return Draft7Validator(schema, registry=self.registry)

    def test_definitions(self):
        validator = Draft7Validator(self.metaschema, registry=self.registry)
        for schema_path in self.schemas:
            schema = self.resources[schema_path.as_posix()].contents
            try:
                validator.check_schema(schema)
                validator.validate(schema)
            except (SchemaError, ValidationError, Unresolvable) as e:
                self.fail(f"Error in definition {schema_path}: {e}")

    def test_ids(self):
        for schema_path in self.schemas:
            schema = self.resources[schema_path.as_posix()].contents
            self.assertEqual(schema["$id"], schema_path.as_posix())

    def test_configs(self):
        validator = self._validator("config.json")
        presets = files("nmqed") / "presets"
        documents = [
            Path(presets / f.name) for f in presets.iterdir()
            if f.name.endswith(".json")
        ]
        documents += list((Path(__file__).parent / "configs").glob("*.json"))
        for document in documents:
            try:
                validator.validate(
                    json.loads(document.read_text(encoding="utf-8"))
                )
            except (SchemaError, Unresolvable) as e:
                self.fail(f"Error in schema config.json: {e}")
            except ValidationError as e:
                self.fail(f"Error in configuration {document.name}: {e}")

    def test_run_overrides(self):
        validator = self._validator("definitions/run.json")
        validator.validate({"label": "beta0.2", "two_atom": {"beta": 0.2}})
        validator.validate({"cavity_array": {"N_A": 4}, "init": "superradiant"})
        for run in (
            {"label": "beta 0.2"},
            {"t_max": 1, "t_max_T": 1},
            {"outputs": ["population"]},
            {"two_atom": {"beta": 2}},
        ):
            with self.assertRaises(ValidationError, msg=str(run)):
                validator.validate(run)


if __name__ == '__main__':
    unittest.main()
