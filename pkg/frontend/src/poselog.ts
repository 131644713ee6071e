// Pose event capture: every state change plus a 200 ms heartbeat, batched
// under sequence numbers and retried until the server acknowledges. The
// server deduplicates by seq, so resending a batch after a lost response
// is safe. While the network is down events accumulate client-side up to
// a cap, beyond which the oldest are dropped.

export interface PoseEvent {
	t_ms: number;
	node: string;
	heading_rad: number;
	pitch_rad: number;
	audio_t_ms: number | null;
}

export interface PoseSnapshot {
	node: string;
	headingRad: number;
	pitchRad: number;
	audioTMs?: number | null;
}

export type SendBatch = (seq: number, events: PoseEvent[]) => Promise<number>;

export const DEFAULT_HEARTBEAT_MS = 200;
export const BUFFER_CAP = 10000;

export class PoseLogger {
	private pending: PoseEvent[] = [];
	private inFlight: PoseEvent[] | null = null;
	private nextSeq = 1;
	private current: PoseSnapshot | null = null;
	private lastEventT: number | null = null;
	dropped = 0;

	constructor(private send: SendBatch,
		private heartbeatMs = DEFAULT_HEARTBEAT_MS,
		private bufferCap = BUFFER_CAP) { }

	get pendingCount(): number {
		return this.pending.length + (this.inFlight ? this.inFlight.length : 0);
	}

	get seq(): number {
		return this.nextSeq;
	}

	// pose changed (or session started): emit an event at tMs
	update(pose: PoseSnapshot, tMs: number): void {
		this.current = pose;
		this.lastEventT = tMs;
		this.push({
			t_ms: Math.round(tMs),
			node: pose.node,
			heading_rad: pose.headingRad,
			pitch_rad: pose.pitchRad,
			audio_t_ms: pose.audioTMs ?? null,
		});
	}

	// called on a timer; emits any heartbeats that have come due
	tick(tMs: number): void {
		if (this.current === null || this.lastEventT === null) return;
		while (this.lastEventT + this.heartbeatMs <= tMs) {
			this.lastEventT += this.heartbeatMs;
			this.push({
				t_ms: Math.round(this.lastEventT),
				node: this.current.node,
				heading_rad: this.current.headingRad,
				pitch_rad: this.current.pitchRad,
				audio_t_ms: this.current.audioTMs ?? null,
			});
		}
	}

	private push(ev: PoseEvent): void {
		this.pending.push(ev);
		while (this.pending.length > this.bufferCap) {
			this.pending.shift();
			this.dropped++;
		}
	}

	// deliver the oldest unacknowledged batch; false means try again later
	async flush(): Promise<boolean> {
		if (this.inFlight === null) {
			if (this.pending.length === 0) return true;
			this.inFlight = this.pending;
			this.pending = [];
		}
		let acked: number;
		try {
			acked = await this.send(this.nextSeq, this.inFlight);
		} catch {
			return false;
		}
		if (acked >= this.nextSeq) {
			this.inFlight = null;
			this.nextSeq++;
			return true;
		}
		return false;
	}

	// flush until everything pending has been acknowledged
	async drain(maxRounds = 50): Promise<boolean> {
		for (let i = 0; i < maxRounds; i++) {
			if (await this.flush() && this.pendingCount === 0) return true;
		}
		return this.pendingCount === 0;
	}
}
