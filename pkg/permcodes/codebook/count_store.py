import os
import logging
import sqlite3
from datetime import datetime, timezone
from .constants import StructureKind
from .exceptions import CountStoreError

logger = logging.getLogger('Codebook.CountStore')


class CountStore:
    '''
    SQLite cache of exact codeword counts for the named square structures

    Attributes
    ----------
    db_path : str
        The path to the database file holding one row per (structure, q)
    '''

    def __init__(self, db_path):
        logger.debug(f"Setting count store path: {db_path}")
        self.db_path = db_path

    def check_db_exists(self):
        return os.path.exists(self.db_path)

    def initialize_db(self):
        try:
            with sqlite3.connect(self.db_path) as conn:
                cursor = conn.cursor()
                cursor.execute('''CREATE TABLE IF NOT EXISTS codeword_counts
                                  (structure TEXT NOT NULL, q INTEGER NOT NULL, count TEXT NOT NULL,
                                   computed_at TEXT NOT NULL, PRIMARY KEY (structure, q));''')
        except sqlite3.Error as error:
            logger.critical("Table creation failed")
            raise CountStoreError(f"Cannot use {self.db_path} as a count cache: {error}") from error

    def _query(self, statement, parameters=()):
        self.initialize_db()
        try:
            with sqlite3.connect(self.db_path) as conn:
                cursor = conn.cursor()
                cursor.execute(statement, parameters)
                return cursor.fetchall()
        except sqlite3.Error as error:
            raise CountStoreError(f"Count cache {self.db_path} is unreadable: {error}") from error

    def get(self, structure, q):
        '''
        Look up a cached count

        Parameters
        ----------
        structure : StructureKind or str
        q : int

        Returns
        -------
        count : int or None
            The cached count, None when it was never stored

        Raises
        ------
        CountStoreError
            The file exists but is not a usable SQLite database
        '''
        if not self.check_db_exists():
            return None
        structure = StructureKind(structure)
        rows = self._query('SELECT count FROM codeword_counts WHERE structure = ? AND q = ?', (structure.value, q))
        if not rows:
            return None
        logger.debug(f"Cache hit for {structure} q={q}")
        # stored as text, counts overflow SQLite integers
        return int(rows[0][0])

    def put(self, structure, q, count):
        structure = StructureKind(structure)
        if structure == StructureKind.RANDOM_REGULAR or structure == StructureKind.CUSTOM:
            raise ValueError(f"Counts of {structure} graphs depend on more than q and are not cached")
        self._query('INSERT OR REPLACE INTO codeword_counts VALUES (?, ?, ?, ?)',
                    (structure.value, q, str(int(count)), datetime.now(timezone.utc).isoformat()))
        logger.info(f"Stored count {count} for {structure} q={q}")

    def entries(self):
        if not self.check_db_exists():
            return []
        rows = self._query('SELECT structure, q, count FROM codeword_counts ORDER BY structure, q')
        return [(StructureKind(s), q, int(c)) for s, q, c in rows]
