from typing import Any, Optional, Protocol
import json

from .schema import validate


class DictSerializable(Protocol):
    def to_dict(self) -> dict:
        raise NotImplementedError('')


def write_json(data: Any, path: str, indent: Optional[int] = None) -> None:
    if hasattr(data, 'to_dict'):
        data = data.to_dict()

    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=indent)


def read_json(path: str, schema: Optional[str] = None) -> dict:
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f'{path} is not valid JSON: {e}')

    if schema is not None:
        validate(data, schema)
    return data
