"""Scenario files, the built-in reproduction scenario and the workload generator.

Scenario files are sectioned plain text::

    [params]
    granularity_s|3
    tcomm_s|3
    overhead_s|1.0
    hash_alg|md5
    [users]
    alice|alice.priv        # name|private key file (blank: ephemeral key)
    [resources]
    R1|0|10|100|100|alice   # name|enter_time|mips|bandwidth|memory|owner
    [clusters]
    C1|R1,R2                # cluster_id|comma-separated resource names
    [jobs]
    alice|20|30             # user|length_mi|memory_mb[|signer]

The optional ``signer`` column names the user whose key signs the
submission; it defaults to the submitting user. Text after ``#`` is a
comment.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from . import auth
from .model import Number, SchedulingParams
from .registry import NAME_RE, parse_number

BUILTIN_PREFIX = "builtin:"
SECTIONS = ("params", "users", "resources", "clusters", "jobs")
DEFAULT_OVERHEAD_S = 1.0
KEYDIR_ENV = "GRIDFORGE_KEYDIR"


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class UserSpec:
    name: str
    key_file: Optional[str] = None


@dataclass(frozen=True)
class ResourceSpec:
    name: str
    enter_time: Number
    mips: Number
    bandwidth_mbps: Number
    memory_mb: Number
    owner: str


@dataclass(frozen=True)
class ClusterSpec:
    cluster_id: str
    resource_names: tuple[str, ...]


@dataclass(frozen=True)
class JobSpec:
    user: str
    length_mi: Number
    memory_mb: Number
    signer: Optional[str] = None


@dataclass(frozen=True)
class Scenario:
    granularity_s: Number = 3
    tcomm_s: Optional[Number] = None
    overhead_s: Number = DEFAULT_OVERHEAD_S
    hash_alg: auth.HashAlg = auth.DEFAULT_HASH
    key_bits: int = auth.DEFAULT_BITS
    users: tuple[UserSpec, ...] = ()
    resources: tuple[ResourceSpec, ...] = ()
    clusters: tuple[ClusterSpec, ...] = ()
    jobs: tuple[JobSpec, ...] = ()
    # directory key files are resolved against when no keydir is given
    base_dir: Optional[Path] = field(default=None, compare=False)

    @property
    def params(self) -> SchedulingParams:
        return SchedulingParams(self.granularity_s, self.tcomm_s)

    def with_jobs(self, jobs: Sequence[JobSpec]) -> "Scenario":
        out = replace(self, jobs=tuple(jobs))
        out.validate()
        return out

    def validate(self) -> None:
        try:
            self.params
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
        if not self.overhead_s >= 0:
            raise ScenarioError(f"overhead_s must be >= 0, got {self.overhead_s}")
        if self.key_bits not in auth.SUPPORTED_BITS:
            raise ScenarioError(f"key_bits must be one of {auth.SUPPORTED_BITS}")
        user_names = set()
        for u in self.users:
            _check_name("user", u.name)
            if u.name in user_names:
                raise ScenarioError(f"user {u.name} listed twice")
            user_names.add(u.name)
        res_names = set()
        for r in self.resources:
            _check_name("resource", r.name)
            if r.name in res_names:
                raise ScenarioError(f"resource {r.name} listed twice")
            res_names.add(r.name)
            if r.owner not in user_names:
                raise ScenarioError(f"resource {r.name}: owner {r.owner} is not a listed user")
            for attr in ("mips", "bandwidth_mbps", "memory_mb"):
                if not getattr(r, attr) > 0:
                    raise ScenarioError(f"resource {r.name}: {attr} must be > 0")
        covered: dict[str, str] = {}
        for c in self.clusters:
            if not c.resource_names:
                raise ScenarioError(f"cluster {c.cluster_id} has no resources")
            for name in c.resource_names:
                if name not in res_names:
                    raise ScenarioError(f"cluster {c.cluster_id}: unknown resource {name}")
                if name in covered:
                    raise ScenarioError(
                        f"resource {name} is in clusters {covered[name]} and {c.cluster_id}"
                    )
                covered[name] = c.cluster_id
        missing = res_names - covered.keys()
        if missing:
            raise ScenarioError(f"resources in no cluster: {', '.join(sorted(missing))}")
        for i, j in enumerate(self.jobs, 1):
            if j.user not in user_names:
                raise ScenarioError(f"job {i}: unknown user {j.user}")
            if j.signer is not None and j.signer not in user_names:
                raise ScenarioError(f"job {i}: unknown signer {j.signer}")
            if not j.length_mi > 0:
                raise ScenarioError(f"job {i}: length_mi must be > 0")
            if not j.memory_mb >= 0:
                raise ScenarioError(f"job {i}: memory_mb must be >= 0")


def _check_name(kind: str, name: str) -> None:
    if not NAME_RE.match(name):
        raise ScenarioError(f"{kind} name {name!r} must match [A-Za-z0-9_-]+")


# built-in scenario: the sixteen registered resources, four per cluster


def paper_r16() -> Scenario:
    resources = tuple(
        ResourceSpec(
            name=f"R{k}",
            enter_time=k - 1,
            mips=10 * k,
            bandwidth_mbps=50 + 50 * k,
            memory_mb=100 * k,
            owner="gisadmin",
        )
        for k in range(1, 17)
    )
    clusters = tuple(
        ClusterSpec(f"C{c}", tuple(f"R{k}" for k in range(4 * c - 3, 4 * c + 1))) for c in range(1, 5)
    )
    scenario = Scenario(
        granularity_s=3,
        tcomm_s=3,
        overhead_s=DEFAULT_OVERHEAD_S,
        hash_alg=auth.HashAlg.MD5,
        users=(UserSpec("gisadmin"), UserSpec("griduser")),
        resources=resources,
        clusters=clusters,
    )
    scenario.validate()
    return scenario


BUILTINS = {"paper-r16": paper_r16}


def generate_jobs(count: int, user: str) -> list[JobSpec]:
    """Deterministic stand-in workload: job i has 20 + 7*(i mod 9) MI and
    30 + 11*(i mod 13) Mb, i counting from 0."""
    return [JobSpec(user, 20 + 7 * (i % 9), 30 + 11 * (i % 13)) for i in range(count)]


def workload_user(scenario: Scenario) -> str:
    """User the generator attributes jobs to: the first one owning no resource."""
    owners = {r.owner for r in scenario.resources}
    for u in scenario.users:
        if u.name not in owners:
            return u.name
    if not scenario.users:
        raise ScenarioError("scenario has no users to submit generated jobs")
    return scenario.users[0].name


# parsing


def load_scenario(path: Union[str, Path]) -> Scenario:
    text_path = str(path)
    if text_path.startswith(BUILTIN_PREFIX):
        name = text_path[len(BUILTIN_PREFIX):]
        try:
            return BUILTINS[name]()
        except KeyError:
            raise ScenarioError(
                f"unknown builtin scenario {name!r}; available: {', '.join(BUILTINS)}"
            ) from None
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text, base_dir=path.parent, source=str(path))


def parse_scenario(text: str, base_dir: Optional[Path] = None, source: str = "<scenario>") -> Scenario:
    section = None
    kw: dict = {}
    users, resources, clusters, jobs = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        def fail(msg):
            raise ScenarioError(f"{source}:{lineno}: {msg}")

        if line.startswith("["):
            if not line.endswith("]") or line[1:-1] not in SECTIONS:
                fail(f"unknown section header {line!r}")
            section = line[1:-1]
            continue
        parts = [p.strip() for p in line.split("|")]
        try:
            if section == "params":
                if len(parts) == 1 and "=" in line:
                    parts = [p.strip() for p in line.split("=", 1)]
                if len(parts) != 2:
                    fail("expected key|value")
                key, value = parts
                if key in ("granularity_s", "tcomm_s", "overhead_s"):
                    kw[key] = parse_number(value)
                elif key == "hash_alg":
                    kw[key] = auth.HashAlg(value.lower())
                elif key == "key_bits":
                    kw[key] = int(value)
                else:
                    fail(f"unknown parameter {key!r}")
            elif section == "users":
                if len(parts) not in (1, 2):
                    fail("expected name|key_file")
                users.append(UserSpec(parts[0], (parts[1] if len(parts) == 2 and parts[1] else None)))
            elif section == "resources":
                if len(parts) != 6:
                    fail("expected name|enter_time|mips|bandwidth|memory|owner")
                name, enter, mips, bw, mem, owner = parts
                resources.append(
                    ResourceSpec(name, parse_number(enter), parse_number(mips),
                                 parse_number(bw), parse_number(mem), owner)
                )
            elif section == "clusters":
                if len(parts) != 2:
                    fail("expected cluster_id|R1,R2,...")
                names = tuple(n.strip() for n in parts[1].split(",") if n.strip())
                clusters.append(ClusterSpec(parts[0], names))
            elif section == "jobs":
                if len(parts) not in (3, 4):
                    fail("expected user|length_mi|memory_mb[|signer]")
                signer = parts[3] if len(parts) == 4 and parts[3] else None
                jobs.append(JobSpec(parts[0], parse_number(parts[1]), parse_number(parts[2]), signer))
            else:
                fail("entry outside any section")
        except ValueError as exc:
            fail(str(exc))
    scenario = Scenario(
        users=tuple(users),
        resources=tuple(resources),
        clusters=tuple(clusters),
        jobs=tuple(jobs),
        base_dir=base_dir,
        **kw,
    )
    try:
        scenario.validate()
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    return scenario


# keys


def default_keydir() -> Optional[Path]:
    value = os.environ.get(KEYDIR_ENV)
    return Path(value) if value else None


def load_keys(scenario: Scenario, keydir: Optional[Union[str, Path]] = None) -> dict[str, auth.KeyPair]:
    """Materialize one keypair per scenario user.

    Users without a key file get a fresh in-memory key.
    """
    keydir = Path(keydir) if keydir is not None else default_keydir()
    keys = {}
    for user in scenario.users:
        if user.key_file is None:
            keys[user.name] = auth.generate_keypair(scenario.key_bits)
            continue
        path = Path(user.key_file)
        if not path.is_absolute():
            base = keydir if keydir is not None else (scenario.base_dir or Path.cwd())
            path = base / path
        try:
            keys[user.name] = auth.load_private_key(path)
        except (OSError, ValueError, auth.AuthError) as exc:
            raise ScenarioError(f"user {user.name}: cannot load key {path}: {exc}") from None
    return keys


def resolve_keys(scenario: Scenario, keys: Optional[Mapping[str, auth.KeyPair]]) -> Mapping[str, auth.KeyPair]:
    return load_keys(scenario) if keys is None else keys
