// Replay of a stored annotation: a clock walks the pose trace while the
// matching transcript token is highlighted. A token becomes active exactly
// at its start_ms and stays active until the next token's start_ms.

export interface ReplayToken {
	token: string;
	original?: string;
	start_ms: number;
	end_ms: number;
}

export interface PoseWire {
	t_ms: number;
	node: string;
	heading_rad: number;
	pitch_rad: number;
	audio_t_ms?: number | null;
}

export function activeTokenIndex(tokens: ReplayToken[], tMs: number): number {
	let active = -1;
	for (let i = 0; i < tokens.length; i++) {
		if (tokens[i].start_ms <= tMs) active = i;
		else break;
	}
	return active;
}

// the pose being shown at tMs: latest pose at or before it (hold-last)
export function poseAtTime(trace: PoseWire[], tMs: number): PoseWire | null {
	let shown: PoseWire | null = null;
	for (let pose of trace) {
		if (pose.t_ms <= tMs) shown = pose;
		else break;
	}
	return shown;
}

export function replaySpanMs(trace: PoseWire[], tokens: ReplayToken[]): number {
	let last = 0;
	if (trace.length) last = Math.max(last, trace[trace.length - 1].t_ms);
	if (tokens.length) last = Math.max(last, tokens[tokens.length - 1].end_ms);
	return last;
}

export class ReplayClock {
	private playing = false;
	private baseMs = 0;          // replay position when (re)started
	private startedAt = 0;       // wall time of last play()

	constructor(private now: () => number = () => Date.now()) { }

	get isPlaying(): boolean {
		return this.playing;
	}

	currentMs(): number {
		if (!this.playing) return this.baseMs;
		return this.baseMs + (this.now() - this.startedAt);
	}

	play(): void {
		if (this.playing) return;
		this.startedAt = this.now();
		this.playing = true;
	}

	pause(): void {
		if (!this.playing) return;
		this.baseMs = this.currentMs();
		this.playing = false;
	}

	seek(tMs: number): void {
		this.baseMs = Math.max(0, tMs);
		this.startedAt = this.now();
	}
}
