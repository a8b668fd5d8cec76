// Side-view forward kinematics for the schematic limb drawing: projects the
// roll-pitch-pitch-roll chain onto its pitch plane (rolls ignored), enough
// for a decision-relevant 2D pose sketch.

export interface LimbLinks {
  base: number;
  shoulder: number;
  upper: number;
  forearm: number;
  tool: number;
}

export const DEFAULT_LINKS: LimbLinks = {
  base: 0.05,
  shoulder: 0.05,
  upper: 0.3,
  forearm: 0.3,
  tool: 0.05,
};

/** Joint waypoints [x, z][] for pitch angles j2/j3 (radians, j1/j4 ignored). */
export function limbSideView(
  j2: number,
  j3: number,
  links: LimbLinks = DEFAULT_LINKS
): [number, number][] {
  const points: [number, number][] = [[0, 0]];
  let x = links.base + links.shoulder;
  let z = 0;
  let heading = 0; // 0 = along +x; positive pitch dips toward -z
  points.push([x, z]);
  heading += j2;
  x += links.upper * Math.cos(heading);
  z += -links.upper * Math.sin(heading);
  points.push([x, z]);
  heading += j3;
  const tail = links.forearm + links.tool;
  x += tail * Math.cos(heading);
  z += -tail * Math.sin(heading);
  points.push([x, z]);
  return points;
}
