// Panorama viewer state and projection math.
//
// World frame: x/y horizontal, z up. Heading is the math angle in the x-y
// plane (counterclockwise from +x), kept in [0, 2π); pitch positive looks
// up, clamped to [−π/2, π/2]. The view is a perspective reprojection of an
// equirectangular image at a fixed 90° horizontal field of view.

export const TAU = Math.PI * 2;
export const DEFAULT_HFOV = Math.PI / 2;
// a drag across half the viewport turns the camera by this much
export const DRAG_SENSITIVITY = Math.PI / 2;

export interface GraphNode {
	id: string;
	position: [number, number, number];
	panorama: string;
}

export interface NavGraph {
	environmentId: string;
	nodes: Map<string, GraphNode>;
	neighbors: Map<string, Set<string>>;
}

export interface ViewerState {
	node: string;
	headingRad: number;
	pitchRad: number;
}

export function wrapHeading(h: number): number {
	let w = h % TAU;
	return w < 0 ? w + TAU : w;
}

export function clampPitch(p: number): number {
	return Math.max(-Math.PI / 2, Math.min(Math.PI / 2, p));
}

export function parseGraph(doc: any): NavGraph {
	let nodes = new Map<string, GraphNode>();
	for (let n of doc.nodes) {
		nodes.set(n.id, { id: n.id, position: n.position, panorama: n.panorama });
	}
	let neighbors = new Map<string, Set<string>>();
	for (let id of nodes.keys()) neighbors.set(id, new Set());
	for (let [a, b] of doc.edges) {
		neighbors.get(a)!.add(b);
		neighbors.get(b)!.add(a);
	}
	return { environmentId: doc.environment_id, nodes, neighbors };
}

export function neighborsOf(graph: NavGraph, id: string): string[] {
	return [...(graph.neighbors.get(id) ?? [])].sort();
}

export function dragLook(state: ViewerState, dxFraction: number, dyFraction: number,
	sensitivity = DRAG_SENSITIVITY): ViewerState {
	// dragging right by half the viewport adds exactly `sensitivity` heading
	return {
		node: state.node,
		headingRad: wrapHeading(state.headingRad + (dxFraction / 0.5) * sensitivity),
		pitchRad: clampPitch(state.pitchRad + (dyFraction / 0.5) * sensitivity),
	};
}

// smallest signed angle a−b, in (−π, π]
export function signedDelta(a: number, b: number): number {
	let d = wrapHeading(a - b);
	return d > Math.PI ? d - TAU : d;
}

export function bearingBetween(graph: NavGraph, from: string, to: string): number {
	let [ax, ay] = graph.nodes.get(from)!.position;
	let [bx, by] = graph.nodes.get(to)!.position;
	return wrapHeading(Math.atan2(by - ay, bx - ax));
}

export function elevationBetween(graph: NavGraph, from: string, to: string): number {
	let [ax, ay, az] = graph.nodes.get(from)!.position;
	let [bx, by, bz] = graph.nodes.get(to)!.position;
	let flat = Math.hypot(bx - ax, by - ay);
	return Math.atan2(bz - az, flat);
}

export interface Marker {
	node: string;
	bearingRad: number;
	// fractions of the viewport, 0..1, only meaningful when visible
	screenX: number;
	screenY: number;
	visible: boolean;
}

export function projectMarkers(graph: NavGraph, state: ViewerState,
	hfov = DEFAULT_HFOV, aspect = 16 / 9): Marker[] {
	let vfov = hfov / aspect;
	let out: Marker[] = [];
	for (let id of neighborsOf(graph, state.node)) {
		let bearing = bearingBetween(graph, state.node, id);
		let rel = signedDelta(bearing, state.headingRad);
		let elev = elevationBetween(graph, state.node, id);
		let relPitch = elev - state.pitchRad;
		let visible = Math.abs(rel) <= hfov / 2 && Math.abs(relPitch) <= vfov / 2;
		// counterclockwise (positive rel) is to the viewer's left, so it
		// maps to smaller screen x; this matches viewRay's handedness
		out.push({
			node: id,
			bearingRad: bearing,
			screenX: 0.5 - rel / hfov,
			screenY: 0.5 - relPitch / vfov,
			visible,
		});
	}
	return out;
}

// moving is only ever allowed onto a neighbor of the current node
export function clickNeighbor(graph: NavGraph, state: ViewerState,
	target: string): ViewerState {
	if (!graph.neighbors.get(state.node)?.has(target)) {
		return state;
	}
	return { node: target, headingRad: state.headingRad, pitchRad: state.pitchRad };
}

// ---- reprojection math (used by the canvas renderer) ----

// direction of the view ray through a viewport point, fractions in [0,1]
export function viewRay(xFrac: number, yFrac: number, heading: number,
	pitch: number, hfov = DEFAULT_HFOV, aspect = 16 / 9): [number, number, number] {
	let planeHalfW = Math.tan(hfov / 2);
	let planeHalfH = planeHalfW / aspect;
	let px = (xFrac - 0.5) * 2 * planeHalfW;
	let py = (0.5 - yFrac) * 2 * planeHalfH;
	// camera looks along +x before rotation; rotate by pitch then heading
	let cp = Math.cos(pitch), sp = Math.sin(pitch);
	let ch = Math.cos(heading), sh = Math.sin(heading);
	let fx = cp - py * sp;     // forward + vertical plane offset, x-z rotation
	let fz = sp + py * cp;
	let x = fx * ch - (-px) * sh;
	let y = fx * sh + (-px) * ch;
	return [x, y, fz];
}

// equirectangular texture coordinates for a world ray, u,v in [0,1)
export function rayToEquirect(ray: [number, number, number]): { u: number; v: number } {
	let [x, y, z] = ray;
	let lon = wrapHeading(Math.atan2(y, x));
	let lat = Math.atan2(z, Math.hypot(x, y));
	return { u: lon / TAU, v: 0.5 - lat / Math.PI };
}
