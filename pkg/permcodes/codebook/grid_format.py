'''
Plain-text grids: a header line "q N" followed by N whitespace-separated
tokens in row-major order. Symbols are "1".."q"; "0" or "." marks an erased
or undetermined cell. Several grids may follow one another in one file.
'''
import logging
import numpy as np
from .constraint_graph import PartialGrid
from .exceptions import InvalidParameterError

logger = logging.getLogger('Codebook.GridFormat')

ERASED_TOKENS = ("0", ".")


def _parse_token(token, q):
    if token in ERASED_TOKENS:
        return 0
    try:
        symbol = int(token)
    except ValueError:
        raise InvalidParameterError(f"Unreadable grid token '{token}'")
    if not 1 <= symbol <= q:
        raise InvalidParameterError(f"Symbol {symbol} outside 1..{q}")
    return symbol


def read_grids(text):
    '''
    Parse every grid in `text`

    Returns
    -------
    grids : [(int, np.ndarray)]
        Alphabet size and symbol vector (0 for erased cells) of each grid
    '''
    tokens = text.split()
    grids = []
    pos = 0
    while pos < len(tokens):
        try:
            q, n = int(tokens[pos]), int(tokens[pos + 1])
        except (ValueError, IndexError):
            raise InvalidParameterError(f"Expected a 'q N' header at token {pos}")
        if q < 2 or n < 1:
            raise InvalidParameterError(f"Invalid grid header '{q} {n}'")
        body = tokens[pos + 2:pos + 2 + n]
        if len(body) != n:
            raise InvalidParameterError(f"Grid declares {n} cells but only {len(body)} follow")
        grids.append((q, np.array([_parse_token(t, q) for t in body], dtype=np.int64)))
        pos += 2 + n
    if not grids:
        raise InvalidParameterError("No grid found")
    logger.debug(f"Read {len(grids)} grid(s)")
    return grids


def read_grid(text):
    return read_grids(text)[0]


def read_partial_grid(text):
    q, symbols = read_grid(text)
    return PartialGrid.from_symbols(q, symbols)


def format_grid(q, symbols, erased_token="0"):
    '''Square grids are written q tokens per line, anything else on one line'''
    symbols = [int(s) for s in symbols]
    n = len(symbols)
    cells = [str(s) if s else erased_token for s in symbols]
    lines = [f"{q} {n}"]
    if n == q * q:
        lines.extend(" ".join(cells[i * q:(i + 1) * q]) for i in range(q))
    else:
        lines.append(" ".join(cells))
    return "\n".join(lines) + "\n"


def format_partial_grid(grid, erased_token="0"):
    return format_grid(grid.q, grid.to_symbols(), erased_token)
