"""Deployed-code download from an Etherscan-compatible explorer, with a
one-file-per-address cache."""

from __future__ import annotations

import logging
import os
import re
import time
from pathlib import Path
from typing import Callable, Optional

import requests

log = logging.getLogger(__name__)

API_KEY_ENV = "EVMCFG_API_KEY"
ENDPOINT_ENV = "EVMCFG_EXPLORER_URL"
CACHE_ENV = "EVMCFG_CACHE_DIR"
DEFAULT_ENDPOINT = "https://api.etherscan.io/api"

ADDRESS_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")
_HEX_RE = re.compile(r"^0x([0-9a-fA-F]{2})*$")


class FetchError(Exception):
    pass


class InvalidAddress(FetchError, ValueError):
    pass


class NetworkError(FetchError):
    pass


class RateLimited(FetchError):
    pass


class EmptyCode(FetchError):
    pass


def is_address(text: str) -> bool:
    return bool(ADDRESS_RE.match(text.strip()))


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "evmcfg" / "code"


def fetch_bytecode(
    address: str,
    api_key: Optional[str] = None,
    endpoint: Optional[str] = None,
    cache_dir: Optional[os.PathLike] = None,
    session: Optional[requests.Session] = None,
    retries: int = 3,
    backoff: float = 1.0,
    timeout: float = 30.0,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Return the runtime bytecode at ``address`` as ``0x``-prefixed hex.

    Cached copies are served without touching the network. Rate limiting
    and transport errors are retried up to ``retries`` times with
    exponential backoff.
    """
    address = address.strip()
    if not is_address(address):
        raise InvalidAddress(f"not a 20-byte hex address: {address!r}")
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    path = cache / f"{address.lower()}.hex"
    if path.is_file():
        code = path.read_text().strip()
        if code in ("", "0x"):
            raise EmptyCode(f"{address} has no code (cached)")
        return code

    api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV) or DEFAULT_ENDPOINT
    params = {"module": "proxy", "action": "eth_getCode", "address": address, "tag": "latest"}
    if api_key:
        params["apikey"] = api_key
    http = session or requests.Session()

    last: Exception = NetworkError("no attempt made")
    for attempt in range(retries + 1):
        if attempt:
            sleep(backoff * 2 ** (attempt - 1))
        try:
            code = _request(http, endpoint, params, timeout)
        except (RateLimited, NetworkError) as exc:
            log.warning("fetch %s attempt %d failed: %s", address, attempt + 1, exc)
            last = exc
            continue
        if code in ("", "0x"):
            raise EmptyCode(f"{address} has no code")
        cache.mkdir(parents=True, exist_ok=True)
        path.write_text(code + "\n")
        return code
    raise last


def _request(http: requests.Session, endpoint: str, params: dict, timeout: float) -> str:
    try:
        resp = http.get(endpoint, params=params, timeout=timeout)
    except requests.RequestException as exc:
        raise NetworkError(str(exc)) from exc
    if resp.status_code == 429:
        raise RateLimited("HTTP 429")
    if resp.status_code >= 400:
        raise NetworkError(f"HTTP {resp.status_code}")
    try:
        body = resp.json()
    except ValueError as exc:
        raise NetworkError("response is not JSON") from exc
    result = body.get("result") if isinstance(body, dict) else None
    if isinstance(result, str) and "rate limit" in result.lower():
        raise RateLimited(result)
    if "error" in body:
        raise NetworkError(str(body["error"]))
    if not isinstance(result, str) or not _HEX_RE.match(result):
        raise NetworkError(f"unexpected result: {str(result)[:80]!r}")
    return result.lower()
