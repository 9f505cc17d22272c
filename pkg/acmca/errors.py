"""
ACMCA 예외 계층 - 각 예외는 CLI 종료 코드를 가진다
"""


class AcmcaError(Exception):
    """모든 도메인 예외의 기본 클래스"""
    exit_code = 1


class InternalError(AcmcaError):
    exit_code = 1


class UsageError(AcmcaError):
    exit_code = 2


class ShapeError(UsageError, ValueError):
    """텐서 형상 불일치"""


class ConfigurationError(AcmcaError):
    exit_code = 2


class VariantError(ConfigurationError):
    """VariantSpec과 입력 모달리티가 맞지 않음"""


class DataError(AcmcaError):
    exit_code = 3


class SchemaError(DataError):
    """입력 파일 스키마 오류"""


class StratificationError(DataError):
    pass


class EmptyIntersectionError(DataError):
    pass


class NumericError(AcmcaError, ArithmeticError):
    exit_code = 4
