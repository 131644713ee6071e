export interface Envelope {
	bins: number[];
	duration_ms: number;
}

// click-to-seek: exactly linear in the horizontal click fraction
export function seekToMs(env: Envelope, clickXFraction: number): number {
	let f = Math.max(0, Math.min(1, clickXFraction));
	return Math.round(f * env.duration_ms);
}

export function playheadFraction(env: Envelope, tMs: number): number {
	if (env.duration_ms <= 0) return 0;
	return Math.max(0, Math.min(1, tMs / env.duration_ms));
}

// reduce the envelope to the number of on-screen bars, keeping peaks
export function resampleBins(env: Envelope, bars: number): number[] {
	if (bars <= 0 || env.bins.length === 0) return [];
	if (bars >= env.bins.length) return [...env.bins];
	let out = new Array(bars).fill(0);
	for (let i = 0; i < env.bins.length; i++) {
		let j = Math.min(bars - 1, Math.floor(i * bars / env.bins.length));
		out[j] = Math.max(out[j], env.bins[i]);
	}
	return out;
}
