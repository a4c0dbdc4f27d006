"""Procedural quadruped morphology generation and the named-robot catalog.

All generated robots share one template: a box base and four identical
3-DoF legs (abduction, hip, knee), with cylindrical thigh/calf links and
spherical feet. Randomization draws follow a fixed, documented order so a
given (config, seed) pair is stable across versions.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

LEG_NAMES = ("FR", "FL", "RR", "RL")
JOINT_TYPES = ("abduction", "hip", "knee")
LINK_TYPES = ("hip", "thigh", "calf", "foot")

# Nominal actuator / mass parameters (A1-class robot).
NOMINAL_MASS = 12.458  # kg, reference mass for PD gain scaling
NOMINAL_LINK_MASSES = {"hip": 0.696, "thigh": 1.013, "calf": 0.166, "foot": 0.06}
NOMINAL_P_GAINS = {"abduction": 100.0, "hip": 100.0, "knee": 100.0}  # Nm/rad
NOMINAL_D_GAINS = {"abduction": 1.0, "hip": 2.0, "knee": 2.0}  # Nms/rad

# Nominal geometry (A1-class): used by the collapsed-to-nominal config.
NOMINAL_BASE_DIMS = (0.27, 0.19, 0.11)
NOMINAL_CALF_LENGTH = 0.20
NOMINAL_CALF_RADIUS = 0.02

FOOT_RADIUS_RATIO = 1.5
ABDUCTION_OFFSET_RATIO = 0.25  # lateral hip-to-thigh offset as a fraction of base width
NOMINAL_HIP_ANGLE = 0.9  # rad, crouched standing pose
NOMINAL_KNEE_ANGLE = -1.8  # rad, for the standard (non-inverted) knee


class ConfigurationError(ValueError):
    """Raised for invalid morphology/randomization configuration."""


class LookupError_(KeyError):
    """Raised for unknown preset names."""


def _check_interval(name: str, iv: tuple[float, float], positive: bool = True) -> None:
    lo, hi = iv
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ConfigurationError(f"{name}: invalid interval [{lo}, {hi}]")
    if positive and lo <= 0.0:
        raise ConfigurationError(f"{name}: interval must be positive, got [{lo}, {hi}]")


@dataclass(frozen=True)
class MorphologyConfig:
    """Sampling ranges for procedural morphology generation.

    Defaults are the published generation ranges; base dims and calf
    dimensions are pre-size-factor values that get multiplied by the
    sampled size factor.
    """

    size_factor_range: tuple[float, float] = (0.8, 1.2)
    base_length_range: tuple[float, float] = (0.134, 0.400)  # m, pre-scale
    base_width_range: tuple[float, float] = (0.097, 0.291)  # m, pre-scale
    base_height_range: tuple[float, float] = (0.057, 0.171)  # m, pre-scale
    base_density_range: tuple[float, float] = (400.0, 1200.0)  # kg/m^3
    calf_length_range: tuple[float, float] = (0.11, 0.33)  # m, pre-scale
    calf_radius_range: tuple[float, float] = (0.01, 0.03)  # m, pre-scale
    thigh_length_ratio_range: tuple[float, float] = (0.75, 1.25)
    thigh_radius_ratio_range: tuple[float, float] = (0.75, 1.25)
    foot_radius_ratio: float = FOOT_RADIUS_RATIO
    link_mass_factor_range: tuple[float, float] = (0.5, 1.5)
    pd_gain_factor_range: tuple[float, float] = (0.7, 1.3)
    nominal_mass: float = NOMINAL_MASS
    nominal_link_masses: dict[str, float] = field(
        default_factory=lambda: dict(NOMINAL_LINK_MASSES)
    )
    nominal_p_gains: dict[str, float] = field(default_factory=lambda: dict(NOMINAL_P_GAINS))
    nominal_d_gains: dict[str, float] = field(default_factory=lambda: dict(NOMINAL_D_GAINS))

    def validate(self) -> None:
        _check_interval("size_factor_range", self.size_factor_range)
        _check_interval("base_length_range", self.base_length_range)
        _check_interval("base_width_range", self.base_width_range)
        _check_interval("base_height_range", self.base_height_range)
        _check_interval("base_density_range", self.base_density_range)
        _check_interval("calf_length_range", self.calf_length_range)
        _check_interval("calf_radius_range", self.calf_radius_range)
        _check_interval("thigh_length_ratio_range", self.thigh_length_ratio_range)
        _check_interval("thigh_radius_ratio_range", self.thigh_radius_ratio_range)
        _check_interval("link_mass_factor_range", self.link_mass_factor_range)
        _check_interval("pd_gain_factor_range", self.pd_gain_factor_range)
        if self.foot_radius_ratio <= 0:
            raise ConfigurationError("foot_radius_ratio must be positive")
        if self.nominal_mass <= 0:
            raise ConfigurationError("nominal_mass must be positive")

    @classmethod
    def nominal_point(cls) -> "MorphologyConfig":
        """Config with every interval collapsed to the A1-class nominal point.

        Base density is chosen so the base mass plus the four nominal legs
        reproduces the nominal total mass.
        """
        bl, bw, bh = NOMINAL_BASE_DIMS
        leg_mass = 4.0 * sum(NOMINAL_LINK_MASSES.values())
        density = (NOMINAL_MASS - leg_mass) / (bl * bw * bh)
        return cls(
            size_factor_range=(1.0, 1.0),
            base_length_range=(bl, bl),
            base_width_range=(bw, bw),
            base_height_range=(bh, bh),
            base_density_range=(density, density),
            calf_length_range=(NOMINAL_CALF_LENGTH, NOMINAL_CALF_LENGTH),
            calf_radius_range=(NOMINAL_CALF_RADIUS, NOMINAL_CALF_RADIUS),
            thigh_length_ratio_range=(1.0, 1.0),
            thigh_radius_ratio_range=(1.0, 1.0),
            link_mass_factor_range=(1.0, 1.0),
            pd_gain_factor_range=(1.0, 1.0),
        )


# ---------------------------------------------------------------------------
# Primitive inertia tensors (solid bodies, about the center of mass).


def box_inertia(mass: float, lx: float, ly: float, lz: float) -> np.ndarray:
    c = mass / 12.0
    return np.diag(
        [c * (ly * ly + lz * lz), c * (lx * lx + lz * lz), c * (lx * lx + ly * ly)]
    )


def cylinder_inertia_z(mass: float, radius: float, length: float) -> np.ndarray:
    """Solid cylinder with its axis along z."""
    perp = mass * (3.0 * radius * radius + length * length) / 12.0
    axial = 0.5 * mass * radius * radius
    return np.diag([perp, perp, axial])


def cylinder_inertia_y(mass: float, radius: float, length: float) -> np.ndarray:
    """Solid cylinder with its axis along y."""
    perp = mass * (3.0 * radius * radius + length * length) / 12.0
    axial = 0.5 * mass * radius * radius
    return np.diag([perp, axial, perp])


def sphere_inertia(mass: float, radius: float) -> np.ndarray:
    i = 0.4 * mass * radius * radius
    return np.diag([i, i, i])


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Leg:
    """Geometry and masses of one leg. hip_offset is in the base frame.

    abduction_offset is signed: positive toward +y (left side), so legs on
    the right carry a negative value.
    """

    name: str
    hip_offset: np.ndarray  # (3,), m
    abduction_offset: float  # m, signed lateral offset from abduction to hip joint
    thigh_length: float
    thigh_radius: float
    calf_length: float
    calf_radius: float
    foot_radius: float
    link_masses: dict[str, float]  # {hip, thigh, calf, foot} kg


@dataclass(frozen=True)
class Morphology:
    """Complete physical description of one quadruped."""

    size_factor: float
    base_dims: tuple[float, float, float]  # (length, width, height) m
    base_mass: float
    legs: tuple[Leg, Leg, Leg, Leg]  # FR, FL, RR, RL
    link_inertias: dict[str, np.ndarray]  # "base" and "<LEG>_<link>" -> 3x3, kg m^2
    p_gains: dict[str, float]  # per joint type, Nm/rad
    d_gains: dict[str, float]  # per joint type, Nms/rad
    knee_sign: float = 1.0
    name: str = "generated"

    @property
    def total_mass(self) -> float:
        return self.base_mass + sum(
            m for leg in self.legs for m in leg.link_masses.values()
        )

    @property
    def leg_length(self) -> float:
        leg = self.legs[0]
        return leg.thigh_length + leg.calf_length

    @property
    def nominal_pose(self) -> np.ndarray:
        """12 joint angles (FR, FL, RR, RL) x (abduction, hip, knee), rad.

        A crouched standing pose. Inverted-knee robots mirror both the hip
        and knee angles so the foot still lands below the hip.
        """
        pose = np.zeros(12)
        for i in range(4):
            pose[3 * i + 1] = NOMINAL_HIP_ANGLE * self.knee_sign
            pose[3 * i + 2] = NOMINAL_KNEE_ANGLE * self.knee_sign
        return pose

    def kp12(self) -> np.ndarray:
        return np.array([self.p_gains[j] for _ in LEG_NAMES for j in JOINT_TYPES])

    def kd12(self) -> np.ndarray:
        return np.array([self.d_gains[j] for _ in LEG_NAMES for j in JOINT_TYPES])

    def standing_height(self) -> float:
        """Base height when standing in the nominal pose with feet touching."""
        leg = self.legs[0]
        h = NOMINAL_HIP_ANGLE
        k = NOMINAL_KNEE_ANGLE
        drop = leg.thigh_length * math.cos(h) + leg.calf_length * math.cos(h + k)
        return drop + leg.foot_radius

    def validate(self) -> None:
        for leg in self.legs:
            if min(leg.thigh_length, leg.thigh_radius, leg.calf_length,
                   leg.calf_radius, leg.foot_radius) <= 0:
                raise ConfigurationError(f"leg {leg.name}: non-positive dimension")
            for m in leg.link_masses.values():
                if m <= 0:
                    raise ConfigurationError(f"leg {leg.name}: non-positive link mass")
        if min(self.base_dims) <= 0 or self.base_mass <= 0:
            raise ConfigurationError("invalid base geometry or mass")
        for key, tensor in self.link_inertias.items():
            if not np.allclose(tensor, tensor.T, atol=1e-12):
                raise ConfigurationError(f"inertia {key} not symmetric")
            if np.linalg.eigvalsh(tensor).min() <= 0:
                raise ConfigurationError(f"inertia {key} not positive definite")


def _leg_side(name: str) -> float:
    return 1.0 if name.endswith("L") else -1.0


def _build_morphology(
    size_factor: float,
    base_dims: tuple[float, float, float],
    base_mass: float,
    thigh_length: float,
    thigh_radius: float,
    calf_length: float,
    calf_radius: float,
    foot_radius: float,
    link_masses: dict[str, float],
    p_gains: dict[str, float],
    d_gains: dict[str, float],
    knee_sign: float,
    name: str,
) -> Morphology:
    bl, bw, bh = base_dims
    ab_off = ABDUCTION_OFFSET_RATIO * bw
    legs = []
    inertias = {"base": box_inertia(base_mass, bl, bw, bh)}
    for leg_name in LEG_NAMES:
        sx = 1.0 if leg_name.startswith("F") else -1.0
        sy = _leg_side(leg_name)
        leg = Leg(
            name=leg_name,
            hip_offset=np.array([sx * bl / 2.0, sy * bw / 2.0, 0.0]),
            abduction_offset=sy * ab_off,
            thigh_length=thigh_length,
            thigh_radius=thigh_radius,
            calf_length=calf_length,
            calf_radius=calf_radius,
            foot_radius=foot_radius,
            link_masses=dict(link_masses),
        )
        legs.append(leg)
        inertias[f"{leg_name}_hip"] = cylinder_inertia_y(
            link_masses["hip"], thigh_radius, ab_off
        )
        inertias[f"{leg_name}_thigh"] = cylinder_inertia_z(
            link_masses["thigh"], thigh_radius, thigh_length
        )
        inertias[f"{leg_name}_calf"] = cylinder_inertia_z(
            link_masses["calf"], calf_radius, calf_length
        )
        inertias[f"{leg_name}_foot"] = sphere_inertia(link_masses["foot"], foot_radius)
    m = Morphology(
        size_factor=size_factor,
        base_dims=base_dims,
        base_mass=base_mass,
        legs=tuple(legs),
        link_inertias=inertias,
        p_gains=p_gains,
        d_gains=d_gains,
        knee_sign=knee_sign,
        name=name,
    )
    m.validate()
    return m


def sample_morphology(
    config: MorphologyConfig, rng: np.random.Generator, name: str = "generated"
) -> Morphology:
    """Draw one random morphology.

    Draw order (fixed): size factor, base length/width/height, base density,
    calf length, calf radius, thigh length ratio, thigh radius ratio, link
    mass factors (hip, thigh, calf, foot), PD gain factor.
    """
    config.validate()
    alpha = rng.uniform(*config.size_factor_range)
    bl = alpha * rng.uniform(*config.base_length_range)
    bw = alpha * rng.uniform(*config.base_width_range)
    bh = alpha * rng.uniform(*config.base_height_range)
    density = rng.uniform(*config.base_density_range)
    calf_length = alpha * rng.uniform(*config.calf_length_range)
    calf_radius = alpha * rng.uniform(*config.calf_radius_range)
    thigh_length = calf_length * rng.uniform(*config.thigh_length_ratio_range)
    thigh_radius = calf_radius * rng.uniform(*config.thigh_radius_ratio_range)
    foot_radius = config.foot_radius_ratio * calf_radius
    link_masses = {
        link: config.nominal_link_masses[link] * rng.uniform(*config.link_mass_factor_range)
        for link in LINK_TYPES
    }
    gain_factor = rng.uniform(*config.pd_gain_factor_range)

    base_mass = density * bl * bw * bh
    total_mass = base_mass + 4.0 * sum(link_masses.values())
    gain_scale = total_mass / config.nominal_mass * gain_factor
    p_gains = {j: config.nominal_p_gains[j] * gain_scale for j in JOINT_TYPES}
    d_gains = {j: config.nominal_d_gains[j] * gain_scale for j in JOINT_TYPES}

    return _build_morphology(
        size_factor=alpha,
        base_dims=(bl, bw, bh),
        base_mass=base_mass,
        thigh_length=thigh_length,
        thigh_radius=thigh_radius,
        calf_length=calf_length,
        calf_radius=calf_radius,
        foot_radius=foot_radius,
        link_masses=link_masses,
        p_gains=p_gains,
        d_gains=d_gains,
        knee_sign=1.0,
        name=name,
    )


# ---------------------------------------------------------------------------
# Preset catalog of named robots.
#
# Per robot: total mass (kg), base dims (l, w, h) m, fully-standing height
# (m), thigh length (m), calf length (m), knee sign. Calf radius is scaled
# from the nominal proportions; leg link masses scale with total mass.

_PRESETS: dict[str, dict] = {
    "A1": dict(mass=12.0, base=(0.27, 0.19, 0.11), standing=0.4, thigh=0.20, calf=0.20),
    "Go1": dict(mass=13.0, base=(0.38, 0.09, 0.11), standing=0.4, thigh=0.22, calf=0.22),
    "Laikago": dict(mass=24.0, base=(0.56, 0.17, 0.19), standing=0.54, thigh=0.26, calf=0.26),
    "Sirius": dict(mass=23.0, base=(0.44, 0.14, 0.22), standing=0.54, thigh=0.27, calf=0.27),
    "Aliengo": dict(mass=21.0, base=(0.65, 0.15, 0.11), standing=0.6, thigh=0.26, calf=0.26),
    "MiniCheetah": dict(mass=9.0, base=(0.3, 0.2, 0.09), standing=0.4, thigh=0.20, calf=0.19),
    "Spot": dict(mass=32.0, base=(0.90, 0.26, 0.22), standing=0.7, thigh=0.43, calf=0.44),
    "ANYmalB": dict(mass=30.0, base=(0.53, 0.27, 0.24), standing=0.5, thigh=0.27, calf=0.27,
                    knee_sign=-1.0),
    "ANYmalC": dict(mass=50.0, base=(0.58, 0.14, 0.18), standing=0.65, thigh=0.3, calf=0.3,
                    knee_sign=-1.0),
    "SpotMicro": dict(mass=4.8, base=(0.14, 0.11, 0.07), standing=0.26, thigh=0.12, calf=0.12),
}

PRESET_NAMES = tuple(_PRESETS)


def preset_morphology(name: str) -> Morphology:
    """Morphology for one of the cataloged commercial robots."""
    try:
        spec = _PRESETS[name]
    except KeyError:
        raise LookupError_(
            f"unknown preset {name!r}; known: {', '.join(PRESET_NAMES)}"
        ) from None
    mass_ratio = spec["mass"] / NOMINAL_MASS
    link_masses = {k: v * mass_ratio for k, v in NOMINAL_LINK_MASSES.items()}
    leg_mass = 4.0 * sum(link_masses.values())
    base_mass = spec["mass"] - leg_mass
    if base_mass <= 0:
        raise ConfigurationError(f"preset {name}: leg masses exceed total mass")
    calf_radius = NOMINAL_CALF_RADIUS * spec["calf"] / NOMINAL_CALF_LENGTH
    p_gains = {j: NOMINAL_P_GAINS[j] * mass_ratio for j in JOINT_TYPES}
    d_gains = {j: NOMINAL_D_GAINS[j] * mass_ratio for j in JOINT_TYPES}
    return _build_morphology(
        size_factor=spec["standing"] / 0.4,
        base_dims=spec["base"],
        base_mass=base_mass,
        thigh_length=spec["thigh"],
        thigh_radius=calf_radius,
        calf_length=spec["calf"],
        calf_radius=calf_radius,
        foot_radius=FOOT_RADIUS_RATIO * calf_radius,
        link_masses=link_masses,
        p_gains=p_gains,
        d_gains=d_gains,
        knee_sign=spec.get("knee_sign", 1.0),
        name=name,
    )


# ---------------------------------------------------------------------------
# Robot description XML (URDF) export / import.


def _fmt(x: float) -> str:
    return repr(float(x))


def _inertial(parent: ET.Element, mass: float, com: tuple, inertia: np.ndarray) -> None:
    inert = ET.SubElement(parent, "inertial")
    ET.SubElement(inert, "origin", xyz=" ".join(_fmt(c) for c in com), rpy="0 0 0")
    ET.SubElement(inert, "mass", value=_fmt(mass))
    ET.SubElement(
        inert,
        "inertia",
        ixx=_fmt(inertia[0, 0]), ixy=_fmt(inertia[0, 1]), ixz=_fmt(inertia[0, 2]),
        iyy=_fmt(inertia[1, 1]), iyz=_fmt(inertia[1, 2]), izz=_fmt(inertia[2, 2]),
    )


def export_robot_description(m: Morphology, path: str | Path) -> None:
    """Write the morphology as a URDF document.

    13 links (base + 4x{hip, thigh, calf}) plus 4 fixed foot spheres and 12
    revolute joints in (FR, FL, RR, RL) x (abduction, hip, knee) order. A
    <control> block carries the PD gains and template fields that plain
    URDF has no slot for, so the document round-trips exactly.
    """
    robot = ET.Element("robot", name=m.name)
    base = ET.SubElement(robot, "link", name="base")
    _inertial(base, m.base_mass, (0, 0, 0), m.link_inertias["base"])
    coll = ET.SubElement(base, "collision")
    geo = ET.SubElement(coll, "geometry")
    ET.SubElement(geo, "box", size=" ".join(_fmt(d) for d in m.base_dims))

    for leg in m.legs:
        n = leg.name
        j = ET.SubElement(robot, "joint", name=f"{n}_abduction", type="revolute")
        ET.SubElement(j, "parent", link="base")
        ET.SubElement(j, "child", link=f"{n}_hip")
        ET.SubElement(j, "origin", xyz=" ".join(_fmt(c) for c in leg.hip_offset), rpy="0 0 0")
        ET.SubElement(j, "axis", xyz="1 0 0")
        ET.SubElement(j, "limit", effort="33.5", velocity="21.0",
                      lower="-3.14159", upper="3.14159")

        hip = ET.SubElement(robot, "link", name=f"{n}_hip")
        _inertial(hip, leg.link_masses["hip"], (0, leg.abduction_offset / 2.0, 0),
                  m.link_inertias[f"{n}_hip"])

        j = ET.SubElement(robot, "joint", name=f"{n}_hip", type="revolute")
        ET.SubElement(j, "parent", link=f"{n}_hip")
        ET.SubElement(j, "child", link=f"{n}_thigh")
        ET.SubElement(j, "origin", xyz=f"0 {_fmt(leg.abduction_offset)} 0", rpy="0 0 0")
        ET.SubElement(j, "axis", xyz="0 1 0")
        ET.SubElement(j, "limit", effort="33.5", velocity="21.0",
                      lower="-3.14159", upper="3.14159")

        thigh = ET.SubElement(robot, "link", name=f"{n}_thigh")
        _inertial(thigh, leg.link_masses["thigh"], (0, 0, -leg.thigh_length / 2.0),
                  m.link_inertias[f"{n}_thigh"])
        coll = ET.SubElement(thigh, "collision")
        ET.SubElement(coll, "origin", xyz=f"0 0 {_fmt(-leg.thigh_length / 2.0)}", rpy="0 0 0")
        geo = ET.SubElement(coll, "geometry")
        ET.SubElement(geo, "cylinder", radius=_fmt(leg.thigh_radius),
                      length=_fmt(leg.thigh_length))

        j = ET.SubElement(robot, "joint", name=f"{n}_knee", type="revolute")
        ET.SubElement(j, "parent", link=f"{n}_thigh")
        ET.SubElement(j, "child", link=f"{n}_calf")
        ET.SubElement(j, "origin", xyz=f"0 0 {_fmt(-leg.thigh_length)}", rpy="0 0 0")
        ET.SubElement(j, "axis", xyz="0 1 0")
        ET.SubElement(j, "limit", effort="33.5", velocity="21.0",
                      lower="-3.14159", upper="3.14159")

        calf = ET.SubElement(robot, "link", name=f"{n}_calf")
        _inertial(calf, leg.link_masses["calf"], (0, 0, -leg.calf_length / 2.0),
                  m.link_inertias[f"{n}_calf"])
        coll = ET.SubElement(calf, "collision")
        ET.SubElement(coll, "origin", xyz=f"0 0 {_fmt(-leg.calf_length / 2.0)}", rpy="0 0 0")
        geo = ET.SubElement(coll, "geometry")
        ET.SubElement(geo, "cylinder", radius=_fmt(leg.calf_radius),
                      length=_fmt(leg.calf_length))

        j = ET.SubElement(robot, "joint", name=f"{n}_foot_fixed", type="fixed")
        ET.SubElement(j, "parent", link=f"{n}_calf")
        ET.SubElement(j, "child", link=f"{n}_foot")
        ET.SubElement(j, "origin", xyz=f"0 0 {_fmt(-leg.calf_length)}", rpy="0 0 0")

        foot = ET.SubElement(robot, "link", name=f"{n}_foot")
        _inertial(foot, leg.link_masses["foot"], (0, 0, 0), m.link_inertias[f"{n}_foot"])
        coll = ET.SubElement(foot, "collision")
        geo = ET.SubElement(coll, "geometry")
        ET.SubElement(geo, "sphere", radius=_fmt(leg.foot_radius))

    control = ET.SubElement(robot, "control", size_factor=_fmt(m.size_factor),
                            knee_sign=_fmt(m.knee_sign))
    for jt in JOINT_TYPES:
        ET.SubElement(control, "pd", joint=jt, p=_fmt(m.p_gains[jt]), d=_fmt(m.d_gains[jt]))

    tree = ET.ElementTree(robot)
    ET.indent(tree)
    tree.write(str(path), xml_declaration=True, encoding="unicode")


def parse_robot_description(path: str | Path) -> Morphology:
    """Rebuild a Morphology from an exported URDF document."""
    root = ET.parse(str(path)).getroot()
    links = {l.get("name"): l for l in root.findall("link")}
    joints = {j.get("name"): j for j in root.findall("joint")}

    def inertial(link: ET.Element) -> tuple[float, np.ndarray]:
        inert = link.find("inertial")
        mass = float(inert.find("mass").get("value"))
        e = inert.find("inertia")
        ixx, ixy, ixz = float(e.get("ixx")), float(e.get("ixy")), float(e.get("ixz"))
        iyy, iyz, izz = float(e.get("iyy")), float(e.get("iyz")), float(e.get("izz"))
        tensor = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
        return mass, tensor

    base_mass, base_inertia = inertial(links["base"])
    base_dims = tuple(
        float(v) for v in links["base"].find("collision/geometry/box").get("size").split()
    )

    leg0 = LEG_NAMES[0]
    thigh_cyl = links[f"{leg0}_thigh"].find("collision/geometry/cylinder")
    calf_cyl = links[f"{leg0}_calf"].find("collision/geometry/cylinder")
    foot_sph = links[f"{leg0}_foot"].find("collision/geometry/sphere")
    thigh_length = float(thigh_cyl.get("length"))
    thigh_radius = float(thigh_cyl.get("radius"))
    calf_length = float(calf_cyl.get("length"))
    calf_radius = float(calf_cyl.get("radius"))
    foot_radius = float(foot_sph.get("radius"))

    link_masses = {lt: inertial(links[f"{leg0}_{lt}"])[0] for lt in LINK_TYPES}

    control = root.find("control")
    size_factor = float(control.get("size_factor"))
    knee_sign = float(control.get("knee_sign"))
    p_gains, d_gains = {}, {}
    for pd in control.findall("pd"):
        p_gains[pd.get("joint")] = float(pd.get("p"))
        d_gains[pd.get("joint")] = float(pd.get("d"))

    m = _build_morphology(
        size_factor=size_factor,
        base_dims=base_dims,
        base_mass=base_mass,
        thigh_length=thigh_length,
        thigh_radius=thigh_radius,
        calf_length=calf_length,
        calf_radius=calf_radius,
        foot_radius=foot_radius,
        link_masses=link_masses,
        p_gains=p_gains,
        d_gains=d_gains,
        knee_sign=knee_sign,
        name=root.get("name", "parsed"),
    )
    # Keep the parsed inertia tensors rather than recomputed ones so the
    # round trip reproduces the document bit-for-bit.
    inertias = {"base": base_inertia}
    for leg_name in LEG_NAMES:
        for lt in LINK_TYPES:
            inertias[f"{leg_name}_{lt}"] = inertial(links[f"{leg_name}_{lt}"])[1]
    return replace(m, link_inertias=inertias)


# ---------------------------------------------------------------------------
# Plain-text key-value serialization.


def morphology_to_text(m: Morphology) -> str:
    lines = [
        f"name = {m.name}",
        f"size_factor = {_fmt(m.size_factor)}",
        f"knee_sign = {_fmt(m.knee_sign)}",
        f"base_length = {_fmt(m.base_dims[0])}",
        f"base_width = {_fmt(m.base_dims[1])}",
        f"base_height = {_fmt(m.base_dims[2])}",
        f"base_mass = {_fmt(m.base_mass)}",
    ]
    leg = m.legs[0]
    lines += [
        f"thigh_length = {_fmt(leg.thigh_length)}",
        f"thigh_radius = {_fmt(leg.thigh_radius)}",
        f"calf_length = {_fmt(leg.calf_length)}",
        f"calf_radius = {_fmt(leg.calf_radius)}",
        f"foot_radius = {_fmt(leg.foot_radius)}",
    ]
    for lt in LINK_TYPES:
        lines.append(f"mass_{lt} = {_fmt(leg.link_masses[lt])}")
    for jt in JOINT_TYPES:
        lines.append(f"p_gain_{jt} = {_fmt(m.p_gains[jt])}")
        lines.append(f"d_gain_{jt} = {_fmt(m.d_gains[jt])}")
    return "\n".join(lines) + "\n"


def morphology_from_text(text: str) -> Morphology:
    kv: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    return _build_morphology(
        size_factor=float(kv["size_factor"]),
        base_dims=(float(kv["base_length"]), float(kv["base_width"]), float(kv["base_height"])),
        base_mass=float(kv["base_mass"]),
        thigh_length=float(kv["thigh_length"]),
        thigh_radius=float(kv["thigh_radius"]),
        calf_length=float(kv["calf_length"]),
        calf_radius=float(kv["calf_radius"]),
        foot_radius=float(kv["foot_radius"]),
        link_masses={lt: float(kv[f"mass_{lt}"]) for lt in LINK_TYPES},
        p_gains={jt: float(kv[f"p_gain_{jt}"]) for jt in JOINT_TYPES},
        d_gains={jt: float(kv[f"d_gain_{jt}"]) for jt in JOINT_TYPES},
        knee_sign=float(kv["knee_sign"]),
        name=kv.get("name", "parsed"),
    )
