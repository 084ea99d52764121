import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path

from forecaster.errors import StorageError

logger = logging.getLogger(__name__)


@contextmanager
def atomic_write(path, mode="w"):
    """
    Escreve num arquivo temporário do mesmo diretório e só troca pelo
    destino (os.replace) se o bloco terminar sem erro.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    except OSError as e:
        raise StorageError(path, f"não foi possível preparar a escrita ({e})")

    encoding = None if "b" in mode else "utf-8"
    try:
        with os.fdopen(fd, mode, encoding=encoding) as handle:
            yield handle
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except OSError as e:
        _discard(tmp_name)
        raise StorageError(path, f"falha de escrita ({e})")
    except BaseException:
        _discard(tmp_name)
        raise


def _discard(tmp_name):
    try:
        os.unlink(tmp_name)
    except FileNotFoundError:
        pass


def read_bytes(path):
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise StorageError(path, f"falha de leitura ({e})")
