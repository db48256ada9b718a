class CodebookError(Exception):
    '''Base class for every error raised by the codebook package'''


class InvalidParameterError(CodebookError, ValueError):
    pass


class ConstructionError(CodebookError):
    '''A structure, random graph or codeword could not be built'''


class CostGuardError(CodebookError):
    '''The requested computation exceeds an exponential-cost guard'''


class ContradictionError(CodebookError):
    '''A constraint or variable update found no consistent assignment'''


class SourceExhaustedError(CodebookError):
    pass


class EncodingFailureError(CodebookError):
    '''
    Every permitted encoding attempt ran into an empty candidate set

    Attributes
    ----------
    attempts : int
        Number of attempts made before giving up
    '''

    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


class ReplayError(CodebookError):
    '''A codeword cannot be produced by any run of the encoder'''


class AnalysisError(CodebookError):
    pass


class CountStoreError(CodebookError):
    '''The count cache file could not be read or written'''
