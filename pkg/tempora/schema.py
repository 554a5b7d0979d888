from functools import lru_cache
import json
import os

import jsonschema
import jsonschema.exceptions


@lru_cache(maxsize=16)
def load_schema(name: str) -> dict:
    module_dir = os.path.dirname(os.path.abspath(__file__))
    path = os.path.join(module_dir, f'{name}.json')
    with open(path, 'r') as f:
        return json.load(f)


def validate(data: dict, name: str) -> dict:
    try:
        jsonschema.validate(data, load_schema(name))
    except jsonschema.exceptions.ValidationError as e:
        raise ValueError(f'The provided {name} document is not valid with error {e.message}')
    except jsonschema.exceptions.SchemaError:
        raise ValueError(f'The {name} _schema_ was itself not valid')
    return data
