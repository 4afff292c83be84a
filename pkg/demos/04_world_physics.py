"""The simulated substrate: soil dynamics, drive kinematics, and LiDAR.

Everything is seeded and deterministic; the same seed and command sequence
always reproduces the same trajectory.
"""

import math

from plantbot import (Circle, MotorCommand, SoilParams, SoilState, Wall,
                      World, WorldConfig, soil_step)

# Soil moisture decays exponentially and watering adds a fixed gain per liter.
soil = SoilState(moisture=50.0)
print("moisture over three dry hours:", end=" ")
for _ in range(3):
    soil = soil_step(soil, 3600.0, 0.0, SoilParams(decay_per_min=0.01))
    print(f"{soil.moisture:.1f}%", end=" ")
soil = soil_step(soil, 0.0, 1.0)
print(f"-> water 1 L -> {soil.moisture:.1f}%")

# Differential drive: equal tracks translate, opposite tracks rotate in place.
world = World(WorldConfig(bounds=None), seed=0)
world.step_robot(MotorCommand(0.2, 0.2, 1.0), 1.0)
print(f"\nforward 1 s at 0.2 m/s -> x={world.pose.x:.2f} m")
world.step_robot(MotorCommand(-0.1, 0.1, 1.0), 1.0)
print(f"counter-rotate 1 s -> heading={world.pose.heading:.2f} rad "
      f"(omega = (r - l) / W = 0.5 rad/s)")

# Collisions stop the body at contact instead of tunnelling through.
world = World(WorldConfig(bounds=None), seed=0)
world.walls.append(Wall(0.3, -1.0, 0.3, 1.0))
world.step_robot(MotorCommand(0.3, 0.3, 5.0), 5.0)
print(f"\ndrive at a wall 0.1 m ahead -> stopped at x={world.pose.x:.3f} m, "
      f"collision flag {world.collided}")

# LiDAR: 72 rays, counter-clockwise from the heading.
world = World(WorldConfig(bounds=(-3, -3, 3, 3), lidar_rays=36), seed=0)
world.obstacles.append(Circle(1.5, 0.0, 0.3))
scan = world.lidar_scan()
print("\nlidar sweep (bearing deg: range m):")
for i in (0, 9, 18, 27):
    bearing = 360 * i // 36
    print(f"  {bearing:3d}: {scan.ranges[i]:.2f}")
print(f"ray 0 sees the obstacle edge at {scan.ranges[0]:.2f} m "
      f"(center 1.5 m minus radius 0.3 m)")
