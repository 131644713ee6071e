// Recording phase machine for the guide screen. Mirrors the legal server
// transitions so the buttons we enable can never drive the session into a
// state the server would reject. elapsedMs only advances while recording.

export type RecorderPhase = "idle" | "recording" | "paused" | "stopped";

export class RecorderState {
	phase: RecorderPhase = "idle";
	uploadedChunks = 0;
	private accumulatedMs = 0;
	private runningSince: number | null = null;

	constructor(private now: () => number = () => Date.now()) { }

	start(): void {
		this.require("idle", "start");
		this.phase = "recording";
		this.runningSince = this.now();
	}

	pause(): void {
		this.require("recording", "pause");
		this.accumulatedMs += this.now() - this.runningSince!;
		this.runningSince = null;
		this.phase = "paused";
	}

	resume(): void {
		this.require("paused", "resume");
		this.phase = "recording";
		this.runningSince = this.now();
	}

	stop(): void {
		if (this.phase !== "recording" && this.phase !== "paused") {
			throw new Error(`cannot stop while ${this.phase}`);
		}
		if (this.runningSince !== null) {
			this.accumulatedMs += this.now() - this.runningSince;
			this.runningSince = null;
		}
		this.phase = "stopped";
	}

	elapsedMs(): number {
		let live = this.runningSince !== null ? this.now() - this.runningSince : 0;
		return this.accumulatedMs + live;
	}

	chunkUploaded(): void {
		this.uploadedChunks++;
	}

	private require(phase: RecorderPhase, action: string): void {
		if (this.phase !== phase) {
			throw new Error(`cannot ${action} while ${this.phase}`);
		}
	}
}
