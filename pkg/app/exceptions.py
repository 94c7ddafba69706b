"""Laboratuvar genelinde kullanılan hata sınıfları."""


class LabError(Exception):
    """Tüm laboratuvar hatalarının tabanı."""


class CongruenceError(LabError, ValueError):
    """İki ParamSet grup adı, şekil veya köken bakımından uyuşmuyor."""


class DegenerateGroupError(LabError, ValueError):
    """Standart sapma için en az 2 eleman gerekir."""


class ShapeMismatchError(LabError, ValueError):
    pass


class ConfigurationError(LabError, ValueError):
    pass


class StaleCacheError(LabError, RuntimeError):
    """ForwardCache, modelin güncel parametrelerine ait değil."""


class NonFiniteGradientError(LabError, FloatingPointError):
    def __init__(self, group: str):
        self.group = group
        super().__init__(f"Sonlu olmayan gradyan: grup={group}")


class ScheduleError(LabError, ValueError):
    pass


class PlanError(LabError, ValueError):
    pass


class DatasetFormatError(LabError, ValueError):
    def __init__(self, message: str, line: int = None):
        self.line = line
        prefix = f"Satır {line}: " if line is not None else ""
        super().__init__(prefix + message)


class InsufficientSupportError(LabError, ValueError):
    """Bir sınıfta istenen sayıda örnek yok."""


class InsufficientRunsError(LabError, ValueError):
    pass


class RunFailedError(LabError, RuntimeError):
    """Koşu sonlu olmayan kayıp veya başka bir hata ile sonlandı."""


class NonFiniteValueError(LabError, FloatingPointError):
    """Tensörde NaN veya Inf değer var."""
