from time import time
from typing import Any, Callable, Dict
from app.config.logging import setup_logger
import json

logger = setup_logger(__name__)

def log_run_middleware(context: Dict[str, Any], call_next: Callable[[], Any]):
    start_time = time()

    logger.info(
        f"Koşu başladı - Strateji: {context.get('strategy_id')} "
        f"Tohum: {context.get('seed')}"
    )

    try:
        result = call_next()
    except Exception as e:
        logger.error(
            f"Koşu başarısız - Strateji: {context.get('strategy_id')} "
            f"Tohum: {context.get('seed')} Hata: {str(e)} "
            f"Süre: {time() - start_time:.2f}s"
        )
        raise

    process_time = time() - start_time

    logger.info(
        f"Koşu bitti - Strateji: {context.get('strategy_id')} "
        f"Tohum: {context.get('seed')} İşlem Süresi: {process_time:.2f}s"
    )

    logger.debug(
        "Detaylı koşu bilgileri: \n" +
        json.dumps(context, indent=2, ensure_ascii=False, default=str)
    )

    return result
