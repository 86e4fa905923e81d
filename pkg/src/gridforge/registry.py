"""Grid Information Service: authenticated user/resource registration and queries."""

from __future__ import annotations

import copy
import os
import re
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

from cryptography.hazmat.primitives.asymmetric import rsa

from . import auth
from .model import Resource

AVAILABLE = "available"
BUSY = "busy"
AVAILABILITY = (AVAILABLE, BUSY)

NAME_RE = re.compile(r"^[A-Za-z0-9_-]+$")

UNKNOWN_USER = "unknown-user"
BAD_SIGNATURE = "bad-signature"


class RegistrationError(Exception):
    pass


class UnknownResource(KeyError):
    pass


@dataclass(frozen=True)
class UserAccount:
    user_id: str
    user_name: str
    public_part: rsa.RSAPublicKey
    registered_at: float


@dataclass
class ResourceEntry:
    resource: Resource
    availability: str
    owner_id: str


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: Optional[str] = None

    def __bool__(self):
        return self.ok


def parse_number(text: str) -> Union[int, float]:
    try:
        return int(text)
    except ValueError:
        return float(text)


def check_name(name: str) -> None:
    if not NAME_RE.match(name):
        raise RegistrationError(f"name {name!r} must match [A-Za-z0-9_-]+")


def user_request(user_name: str, keypair: auth.KeyPair, hash_alg=auth.DEFAULT_HASH) -> auth.SignedEnvelope:
    """Self-signed enrollment request carrying the user's public key."""
    fields = {"user_name": user_name, "public_key": auth.public_to_text(keypair.public_part)}
    return auth.SignedEnvelope.seal(fields, user_name, keypair.private_part, hash_alg)


def resource_request(
    name: str,
    enter_time,
    mips,
    bandwidth_mbps,
    memory_mb,
    owner_id: str,
    keypair: auth.KeyPair,
    hash_alg=auth.DEFAULT_HASH,
) -> auth.SignedEnvelope:
    fields = {
        "name": name,
        "enter_time": repr(enter_time),
        "mips": repr(mips),
        "bandwidth": repr(bandwidth_mbps),
        "memory": repr(memory_mb),
    }
    return auth.SignedEnvelope.seal(fields, owner_id, keypair.private_part, hash_alg)


class Registry:
    """Single owner of registration state.

    Mutations take an internal lock; readers that want a stable view while
    another thread writes should query a :meth:`snapshot`.
    """

    def __init__(self, clock: Callable[[], float] = time.time):
        self.users: dict[str, UserAccount] = {}
        self.resources: dict[str, ResourceEntry] = {}
        self.next_user_seq = 1
        self.clock = clock
        self._lock = threading.Lock()

    # registration

    def register_user(self, request: auth.SignedEnvelope) -> str:
        try:
            fields = request.fields()
            user_name = fields["user_name"]
            public_part = auth.public_from_text(fields["public_key"])
        except (KeyError, ValueError, auth.AuthError) as exc:
            raise RegistrationError(f"malformed user registration: {exc}") from None
        check_name(user_name)
        if not request.verify(public_part):
            raise RegistrationError(f"signature check failed for user {user_name!r}")
        with self._lock:
            if any(u.user_name == user_name for u in self.users.values()):
                raise RegistrationError(f"user name {user_name!r} already registered")
            user_id = f"U{self.next_user_seq:04d}"
            self.next_user_seq += 1
            self.users[user_id] = UserAccount(user_id, user_name, public_part, float(self.clock()))
        return user_id

    def register_resource(self, request: auth.SignedEnvelope, owner: str) -> str:
        account = self.users.get(owner)
        if account is None:
            raise RegistrationError(f"unknown owner {owner!r}")
        if not request.verify(account.public_part):
            raise RegistrationError(f"signature check failed for resource request from {owner}")
        try:
            fields = request.fields()
            name = fields["name"]
            enter_time = parse_number(fields["enter_time"])
            mips = parse_number(fields["mips"])
            bandwidth = parse_number(fields["bandwidth"])
            memory = parse_number(fields["memory"])
        except (KeyError, ValueError, auth.AuthError) as exc:
            raise RegistrationError(f"malformed resource registration: {exc}") from None
        check_name(name)
        with self._lock:
            resource_id = self._free_resource_id(name)
            try:
                resource = Resource(resource_id, name, mips, bandwidth, memory, enter_time)
            except ValueError as exc:
                raise RegistrationError(str(exc)) from None
            self.resources[resource_id] = ResourceEntry(resource, AVAILABLE, owner)
        return resource_id

    def _free_resource_id(self, name: str) -> str:
        if name not in self.resources:
            return name
        n = 2
        while f"{name}-{n}" in self.resources:
            n += 1
        return f"{name}-{n}"

    # queries

    def available_resources(self) -> list[Resource]:
        entries = [e.resource for e in self.resources.values() if e.availability == AVAILABLE]
        return sorted(entries, key=lambda r: (r.enter_time, r.resource_id))

    def resource_characteristics(self, resource_id: str) -> Resource:
        try:
            return self.resources[resource_id].resource
        except KeyError:
            raise UnknownResource(resource_id) from None

    def authenticate_submission(self, envelope: auth.SignedEnvelope, claimed_user: str) -> Verdict:
        account = self.users.get(claimed_user)
        if account is None:
            return Verdict(False, UNKNOWN_USER)
        if not envelope.verify(account.public_part):
            return Verdict(False, BAD_SIGNATURE)
        return Verdict(True)

    def user_by_name(self, user_name: str) -> Optional[UserAccount]:
        for account in self.users.values():
            if account.user_name == user_name:
                return account
        return None

    # availability

    def set_availability(self, resource_id: str, availability: str) -> None:
        if availability not in AVAILABILITY:
            raise ValueError(f"availability must be one of {AVAILABILITY}")
        with self._lock:
            try:
                self.resources[resource_id].availability = availability
            except KeyError:
                raise UnknownResource(resource_id) from None

    def mark_busy(self, resource_id: str) -> None:
        self.set_availability(resource_id, BUSY)

    def mark_available(self, resource_id: str) -> None:
        self.set_availability(resource_id, AVAILABLE)

    def snapshot(self) -> "Registry":
        with self._lock:
            other = Registry(self.clock)
            other.users = dict(self.users)
            other.resources = {k: copy.copy(v) for k, v in self.resources.items()}
            other.next_user_seq = self.next_user_seq
        return other

    # persistence

    def save(self, path: Union[str, Path]) -> None:
        """Write the snapshot file plus one public key file per user.

        Key files go to ``<path>.keys/``; the snapshot itself is written to a
        temporary file and renamed into place.
        """
        path = Path(path)
        key_dir = path.with_name(path.name + ".keys")
        key_dir.mkdir(parents=True, exist_ok=True)
        lines = ["[users]"]
        with self._lock:
            for user in self.users.values():
                key_file = f"{key_dir.name}/{user.user_id}.pub"
                auth.write_public_key(path.parent / key_file, user.public_part, force=True)
                lines.append(
                    f"{user.user_id}|{user.user_name}|{user.registered_at!r}|{key_file}"
                )
            lines.append("[resources]")
            for entry in self.resources.values():
                r = entry.resource
                lines.append(
                    f"{r.resource_id}|{r.name}|{r.enter_time!r}|{r.mips!r}|"
                    f"{r.bandwidth_mbps!r}|{r.memory_mb!r}|{entry.availability}|{entry.owner_id}"
                )
        text = "\n".join(lines) + "\n"
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path: Union[str, Path], clock: Callable[[], float] = time.time) -> "Registry":
        path = Path(path)
        reg = cls(clock)
        section = None
        max_seq = 0
        for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1]
                continue
            parts = line.split("|")
            try:
                if section == "users":
                    user_id, user_name, registered_at, key_file = parts
                    public_part = auth.load_public_key(path.parent / key_file)
                    reg.users[user_id] = UserAccount(
                        user_id, user_name, public_part, float(registered_at)
                    )
                    max_seq = max(max_seq, int(user_id.lstrip("U")))
                elif section == "resources":
                    rid, name, enter, mips, bw, mem, availability, owner = parts
                    if availability not in AVAILABILITY:
                        raise ValueError(f"bad availability {availability!r}")
                    resource = Resource(
                        rid, name, parse_number(mips), parse_number(bw),
                        parse_number(mem), parse_number(enter),
                    )
                    reg.resources[rid] = ResourceEntry(resource, availability, owner)
                else:
                    raise ValueError(f"line outside a known section: {section!r}")
            except (ValueError, OSError, auth.AuthError) as exc:
                raise RegistrationError(f"{path}:{lineno}: {exc}") from None
        reg.next_user_seq = max_seq + 1
        return reg
