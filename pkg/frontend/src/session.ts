// Which controls are live, derived from the server-reported session state.
// The server's transition matrix is the source of truth; the UI only ever
// offers actions the server would accept in the state it last reported.

export interface GuideScreen {
	serverState: string;        // created | recording | paused | transcribing | completed
	finalized: boolean;         // audio finalize acknowledged
	uploadsInFlight: number;
	transcript: string;
}

export interface GuideControls {
	canStart: boolean;
	canPause: boolean;
	canResume: boolean;
	canStop: boolean;
	canSubmit: boolean;
}

export function guideControls(s: GuideScreen): GuideControls {
	return {
		canStart: s.serverState === "created",
		canPause: s.serverState === "recording",
		canResume: s.serverState === "paused",
		canStop: s.serverState === "recording" || s.serverState === "paused",
		canSubmit: canSubmit(s),
	};
}

// submit stays disabled until every chunk is up and finalize succeeded
export function canSubmit(s: GuideScreen): boolean {
	return s.serverState === "transcribing"
		&& s.finalized
		&& s.uploadsInFlight === 0
		&& s.transcript.trim().length > 0;
}

export function followerCanComplete(serverState: string): boolean {
	return serverState === "navigating";
}

// gave_up asks for confirmation first; done completes immediately
export function confirmOutcome(outcome: "done" | "gave_up",
	confirm: (msg: string) => boolean): boolean {
	if (outcome === "done") return true;
	return confirm("Give up on this task? The attempt is recorded as unsuccessful.");
}
