"""Average-of-word-vector embeddings over a file-backed lexicon.

The lexicon is a token -> vector table; alert text is tokenized, in-lexicon
token vectors are averaged, and cosine similarity over the resulting vectors
is the single metric shared by dedup, triage features, and graph retrieval.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np


class DimensionMismatch(ValueError):
    """Vectors of different lengths were compared."""


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs, dropping empty tokens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-width embedding plus the fraction of tokens the lexicon covered.

    ``coverage`` is 0 exactly when no token was found in the lexicon, in which
    case ``values`` is the zero vector and downstream stages apply their
    fail-safe handling.
    """

    values: np.ndarray
    coverage: float

    @property
    def is_zero(self) -> bool:
        return self.coverage == 0.0

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class Lexicon:
    """Token -> vector table with a fixed dimension.

    Every entry vector has length ``dimension``; entries are non-empty.
    """

    dimension: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("lexicon dimension must be >= 1")
        if not self.entries:
            raise ValueError("lexicon entries must be non-empty")
        for token, vec in self.entries.items():
            if len(vec) != self.dimension:
                raise ValueError(
                    f"entry {token!r} has length {len(vec)}, expected {self.dimension}"
                )

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def tokens(self) -> list[str]:
        return sorted(self.entries)


def embed(lex: Lexicon, text: str) -> EmbeddingVector:
    """Arithmetic mean of the lexicon vectors of all in-lexicon tokens.

    Out-of-lexicon tokens are skipped. If nothing is covered the result is the
    zero vector with coverage 0; coverage is the in-lexicon token fraction.
    """
    tokens = tokenize(text)
    if not tokens:
        return EmbeddingVector(np.zeros(lex.dimension), 0.0)
    hits = [lex.entries[t] for t in tokens if t in lex.entries]
    if not hits:
        return EmbeddingVector(np.zeros(lex.dimension), 0.0)
    values = np.mean(np.stack(hits), axis=0)
    return EmbeddingVector(values, len(hits) / len(tokens))


def cosine_similarity(a, b) -> float | None:
    """dot(a, b) / (|a| * |b|); None when either norm is zero.

    Accepts EmbeddingVector or raw arrays. Raises DimensionMismatch on
    unequal lengths.
    """
    va = a.values if isinstance(a, EmbeddingVector) else np.asarray(a, dtype=float)
    vb = b.values if isinstance(b, EmbeddingVector) else np.asarray(b, dtype=float)
    if len(va) != len(vb):
        raise DimensionMismatch(f"lengths {len(va)} and {len(vb)} differ")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return None
    return float(np.dot(va, vb) / (na * nb))


# ---------------------------------------------------------------------------
# Lexicon file I/O
# ---------------------------------------------------------------------------

def load_lexicon(path) -> Lexicon:
    """Load a plain-text vector file: ``token v1 v2 ... vd`` per line.

    Single-space separated, dimension inferred from the first entry, blank
    lines ignored, duplicate tokens resolved last-wins.
    """
    entries: dict[str, np.ndarray] = {}
    dimension = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split(" ")
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'token v1 ... vd'")
            token = parts[0]
            try:
                vec = np.array([float(p) for p in parts[1:]], dtype=float)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad float in vector") from exc
            if dimension is None:
                dimension = len(vec)
            elif len(vec) != dimension:
                raise ValueError(
                    f"{path}:{lineno}: vector length {len(vec)} != {dimension}"
                )
            entries[token] = vec
    if dimension is None:
        raise ValueError(f"{path}: empty lexicon file")
    return Lexicon(dimension=dimension, entries=entries)


def save_lexicon(lex: Lexicon, path) -> None:
    """Write the lexicon in the plain-text format load_lexicon reads."""
    with open(path, "w", encoding="utf-8") as fh:
        for token in sorted(lex.entries):
            vals = " ".join(repr(float(v)) for v in lex.entries[token])
            fh.write(f"{token} {vals}\n")


# ---------------------------------------------------------------------------
# Built-in deterministic lexicon
# ---------------------------------------------------------------------------

# Security-domain vocabulary for the bundled lexicon. Tokens are lowercase
# alphanumerics so the tokenizer maps cleanly back onto them.
_SECURITY_TOKENS = """
ssh sshd authentication failed login logout root user password sudo
privilege escalation firewall iptables port scan nmap brute force attack
malware trojan ransomware worm phishing exfiltration lateral movement
persistence registry powershell cmd bash shell script cron systemd service
daemon process injection overflow buffer exploit vulnerability cve patch
update agent syslog audit log alert rule level integrity checksum file
modified deleted created access denied granted connection established closed
tcp udp http https dns query domain ip address network traffic packet
payload signature detection anomaly baseline threshold window session token
credential hash kerberos ldap smb rdp vnc ftp telnet web server apache
nginx php sql database mysql postgres admin account lockout attempt failure
success invalid unknown source destination host endpoint workstation gateway
router switch proxy vpn tunnel encrypted certificate tls ssl handshake
protocol version downgrade spoofing arp dhcp mac vlan segment zone dmz
internal external inbound outbound upload download transfer bytes volume
spike flood dos syn ack flag reset timeout retry error warning critical
high medium low info notice emergency docker container kubernetes pod
cluster image mount escape rootkit backdoor keylogger spyware botnet c2
command control beacon callback quarantine isolate block allow whitelist
blacklist policy compliance hardening misconfiguration default weak
plaintext leak disclosure enumeration reconnaissance probe sweep ping icmp
banner fingerprint identify monitor response incident ticket case analyst
blue team red wargame range maritime vessel cargo crane scada plc modbus
sensor hmi historian navigation gps radar ais bridge engine ballast
manifest terminal berth pilot tug harbor quay customs freight logistics
""".split()


def _hash_unit_vector(token: str, dimension: int, seed: int) -> np.ndarray:
    """Deterministic unit vector from expanding SHA-256 over (seed, token)."""
    vals: list[float] = []
    counter = 0
    while len(vals) < dimension:
        digest = hashlib.sha256(f"{seed}:{token}:{counter}".encode("utf-8")).digest()
        for i in range(0, len(digest) - 7, 8):
            if len(vals) >= dimension:
                break
            u = int.from_bytes(digest[i : i + 8], "big") / 2.0**64
            vals.append(2.0 * u - 1.0)
        counter += 1
    vec = np.array(vals, dtype=float)
    return vec / np.linalg.norm(vec)


def builtin_lexicon(dimension: int = 16, seed: int = 7) -> Lexicon:
    """The bundled deterministic lexicon: 200+ security tokens, hash-derived
    unit vectors. Reproducible everywhere with no downloads."""
    tokens = sorted(set(_SECURITY_TOKENS))
    entries = {t: _hash_unit_vector(t, dimension, seed) for t in tokens}
    return Lexicon(dimension=dimension, entries=entries)
