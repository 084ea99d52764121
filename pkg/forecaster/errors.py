"""
Hierarquia de erros do pacote forecaster.

Cada erro carrega o código de saída usado pela CLI:
2 = validação, 3 = saúde numérica, 4 = IO.
"""


class ForecasterError(Exception):
    """Erro base de todo o pacote."""

    exit_code = 1


# ============================================
# VALIDAÇÃO (exit code 2)
# ============================================

class ValidationError(ForecasterError):
    exit_code = 2


class ShapeError(ValidationError):
    """Formato de array ou sequência incompatível."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SchemaError(ValidationError):
    """Violação do schema de arquivo; `path` aponta o campo ofensivo."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class CapacityError(ValidationError):
    pass


class ConfigurationError(ValidationError):
    pass


class DegenerateAnchorError(ValidationError):
    pass


class DegenerateSegmentError(ValidationError):
    pass


class EmptyTrackError(ValidationError):
    pass


class LabelError(ValidationError):
    pass


class DegenerateSoftmaxError(ValidationError):
    pass


class DegenerateLossError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class FrameError(ValidationError):
    pass


class CheckpointError(ValidationError):
    pass


class EmptyDatasetError(ValidationError):
    pass


# ============================================
# SAÚDE NUMÉRICA (exit code 3)
# ============================================

class NumericHealthError(ForecasterError):
    """Valor não finito detectado; `tensor_name` é o primeiro tensor afetado."""

    exit_code = 3

    def __init__(self, tensor_name, message=None):
        self.tensor_name = tensor_name
        super().__init__(message or f"valores não finitos em '{tensor_name}'")


# ============================================
# IO (exit code 4)
# ============================================

class StorageError(ForecasterError):
    exit_code = 4

    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{path}: {message}")


class DegenerateInputWarning(UserWarning):
    """Entrada degenerada porém recuperável (ex.: nenhum segmento válido)."""
