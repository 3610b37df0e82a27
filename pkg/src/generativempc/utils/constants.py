import math

TASK_TYPES = ["navigate", "bimanual_reach", "pick_place"]

# Platform caps
PLATFORM_V_MAX = 0.25
PLATFORM_OMEGA_MAX = 1.5
PLATFORM_PDOT_MAX = 0.15

# Drive geometry
WHEEL_RADIUS = 0.085
WHEELBASE = 0.455

# APF / cost shaping radii (m)
RHO_MIN = 1e-3
GOAL_FADE_RADIUS = 0.5
HEADING_SWITCH_RADIUS = 0.5
BLEND_RADIUS = 0.3

# Semantics
HUMAN_TRIGGER_DISTANCE = 1.5
HUMAN_RADIUS = 0.3
PROXIMITY_RANGE = 3.0
OBJECT_SCALE = 10.0

COINCIDENT_EPS = 1e-9
TWO_PI = 2.0 * math.pi
