class CorpusFormatError(ValueError):
    def __init__(self, path: str, line: int, message: str):
        super().__init__(f'{path}:{line}: {message}')
        self.path = path
        self.line = line


class UnknownTermError(ValueError):
    def __init__(self, term: str, path: str = None, line: int = None):
        where = f' ({path}:{line})' if path is not None else ''
        super().__init__(f'Term {term!r} is not in the supplied vocabulary{where}')
        self.term = term


class SliceTooSmallError(ValueError):
    def __init__(self, label: str, size: int, requested: int):
        super().__init__(
            f'Slice {label!r} has {size} documents but {requested} were requested')
        self.label = label


class EnumerationLimitError(ValueError):
    pass


class VocabularyMismatchError(ValueError):
    def __init__(self, expected: str, actual: str):
        super().__init__(
            f'Vocabulary hash {actual[:12]} does not match checkpoint vocabulary {expected[:12]}')


class NumericalError(ArithmeticError):
    def __init__(self, message: str, parameter: str = None, epoch: int = None):
        super().__init__(message)
        self.parameter = parameter
        self.epoch = epoch
